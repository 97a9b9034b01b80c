import json
import math

import numpy as np
import pytest
from scipy.special import ndtr

from convexity_testbed.convex import (Ball, Box, EmptySet, FullSpace, Halfspace, Hull, Polytope,
                                      RandomPolytope, ShellUnion, Stripe, ball_theorem_ratio,
                                      check_appendix_lemmas, check_ball_theorem, estimate_distance,
                                      estimate_thickened_boundary_volume, in_thickened_boundary,
                                      target_from_json, thickened_boundary_bound)
from convexity_testbed.gauss import gaussian_mass_of_radial_band


def test_distance_identical_and_complement():
    A = Ball(1.0, n=2)
    assert estimate_distance(A, A, 1000, 0) == (0.0, 0.0)
    assert estimate_distance(FullSpace(3), EmptySet(3), 1000, 0)[0] == 1.0
    H = Halfspace([1.0, 0.0], 0.0)
    Hc = Halfspace([-1.0, 0.0], 0.0)
    est, se = estimate_distance(H, Hc, 10000, 1)
    assert abs(est - 1.0) <= 4 * se + 1e-12


def test_distance_symmetric():
    A, B = Ball(1.0, n=3), Box([0.5, 1.0, 2.0])
    assert estimate_distance(A, B, 5000, 9) == estimate_distance(B, A, 5000, 9)


@pytest.mark.parametrize("target", [
    Ball(1.3, n=3), Box([0.4, 1.0]), Halfspace([1.0, 2.0], 0.3),
    Polytope([[1, 0], [0, 1], [-1, -1]], [1, 1, 1]), RandomPolytope(3, 12, 0.8, seed=4),
    Hull(np.random.default_rng(0).standard_normal((10, 2))),
])
def test_convex_kinds_pass_segment_test(target):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((4000, target.n)) * 0.7
    inside = X[target.contains(X)]
    assert len(inside) >= 2
    for _ in range(20):
        a, b = inside[rng.integers(len(inside), size=2)]
        t = rng.random(100)[:, None]
        assert target.contains(a + t * (b - a)).all()


def test_random_polytope_contains_ball_r():
    P = RandomPolytope(4, 20, 1.5, seed=3)
    assert np.allclose(np.linalg.norm(P.normals, axis=1), 1.5, atol=1e-9)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((500, 4))
    X = 1.5 * X / np.linalg.norm(X, axis=1, keepdims=True) * rng.random((500, 1))
    assert P.contains(X).all()


@pytest.mark.parametrize("target", [
    Ball(0.7, center=[0.1, 0.2]), Box([0.5, 0.25], center=[1.0, 0.0]), Halfspace([0.0, 1.0], 0.5),
    Polytope([[1, 0], [0, 1], [-1, -1]], [1, 0.5, 1], clip_radius=3.0), RandomPolytope(2, 7, 1.0, seed=5),
    Hull([[0, 0], [1, 0], [0, 2]]), Stripe(2, 5), ShellUnion(2, [0, 1, 2, 3], [1, 0, 1]),
    Hull([[0.5], [1.5]]), EmptySet(2), FullSpace(3),
])
def test_json_round_trip(target):
    obj = json.loads(json.dumps(target.to_json()))
    again = target_from_json(obj)
    X = np.random.default_rng(2).standard_normal((2000, target.n)) * 2
    assert np.array_equal(again.contains(X), target.contains(X))


def test_polytope_distance_matches_brute_force():
    P = Polytope([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 1, 1])
    X = np.array([[2.0, 0.0], [2.0, 2.0], [0.0, -3.0], [0.5, 0.5]])
    assert np.allclose(P.distance(X), [1.0, math.sqrt(2), 2.0, 0.0], atol=1e-6)
    assert np.allclose(P.depth(np.array([[0.5, 0.5], [0.0, 0.9]])), [0.5, 0.1])


def test_stripe_thresholds_equal_mass():
    S = Stripe(1, 5)
    masses = np.diff(np.concatenate([[0.0], ndtr(S.thresholds), [1.0]]))
    assert np.allclose(masses, 1 / 6)
    assert S.contains(np.array([[-5.0], [0.2], [5.0]])).tolist() == [True, False, False]
    assert S.far_from_convex_lower_bound() == pytest.approx(1 / 2 - 1 / 6)


def test_shell_union_boundary_convention():
    S = ShellUnion(1, [0.0, 1.0, 2.0], [True, False])
    assert S.contains(np.array([[0.0], [1.0], [1.0 + 1e-12], [2.0], [2.5]])).tolist() == [True, True, False, False, False]


def test_thickened_boundary_ball_radial():
    C, alpha, m = Ball(2.0, n=3), 0.05, 400_000
    est = estimate_thickened_boundary_volume(C, alpha, m, 0)
    exact = gaussian_mass_of_radial_band(3, 2 - alpha, 2 + alpha)
    assert abs(est.estimate - exact) <= 4 * est.std_error
    assert est.std_error == pytest.approx(math.sqrt(est.estimate * (1 - est.estimate) / m))


def test_thickened_boundary_degenerate_and_range():
    assert estimate_thickened_boundary_volume(FullSpace(2), 0.1, 1000, 0).estimate == 0.0
    with pytest.raises(ValueError):
        estimate_thickened_boundary_volume(Ball(1.0, n=4), 0.5, 1000, 0)
    with pytest.raises(ValueError):
        estimate_thickened_boundary_volume(Stripe(2, 3), 0.1, 1000, 0)


def test_thickened_boundary_random_polytope():
    n = 4
    K, alpha = 2 * math.sqrt(n), 0.1 * n ** -0.75
    P = RandomPolytope(n, 16, 1.0, seed=8, clip_radius=K)
    est = estimate_thickened_boundary_volume(P, alpha, 20_000, 1, K)
    assert est.estimate - 4 * est.std_error <= thickened_boundary_bound(n, K, alpha)


def test_in_thickened_boundary_halfspace_exact():
    H = Halfspace([1.0, 0.0], 0.0)
    X = np.array([[-0.2, 5.0], [-0.05, 0.0], [0.05, 1.0], [0.3, 0.0]])
    assert in_thickened_boundary(H, X, 0.1).tolist() == [False, True, True, False]


def test_ball_theorem_examples():
    H = Halfspace([1.0, 0.0], 0.0)
    ratio, se = ball_theorem_ratio(H, 0.01, 400_000, 0)
    assert abs(ratio - (ndtr(0.01) - 0.5) / 0.01) <= 4 * se
    assert check_ball_theorem(H, 0.01, 100_000, 0)
    assert check_ball_theorem(Ball(2.0, n=4), 0.01, 100_000, 0)
    assert check_ball_theorem(FullSpace(3), 0.01, 1000, 0)
    assert ball_theorem_ratio(FullSpace(3), 0.01, 1000, 0)[0] == 0.0


def test_appendix_a2_ball_equality_case():
    rep = check_appendix_lemmas({"lemma": "A.2", "family": "ball", "n": 3, "rho": 1.0, "alpha": 0.1,
                                 "samples": 100, "seed": 0})
    assert rep["passed"] and abs(rep["margin"]) < 1e-12


def test_appendix_a1_segment_and_box():
    seg = check_appendix_lemmas({"lemma": "A.1", "family": "segment", "n": 2, "rho": 0.0, "alpha": 0.05,
                                 "samples": 50_000, "seed": 1})
    box = check_appendix_lemmas({"lemma": "A.1", "family": "box", "n": 3, "rho": 0.05, "width": 0.08,
                                 "alpha": 0.02, "samples": 50_000, "seed": 2})
    assert seg["passed"] and box["passed"]


def test_appendix_a3_ball_and_polytope():
    ball = check_appendix_lemmas({"lemma": "A.3", "family": "ball", "n": 3, "K": 2.0, "beta": 0.1,
                                  "alpha": 0.01, "samples": 20_000, "seed": 3})
    poly = check_appendix_lemmas({"lemma": "A.3", "family": "polytope", "n": 2, "K": 2.0, "beta": 0.1,
                                  "alpha": 0.01, "samples": 300, "seed": 4, "N": 8})
    assert ball["passed"] and poly["passed"]


def test_appendix_a2_polytope():
    rep = check_appendix_lemmas({"lemma": "A.2", "family": "polytope", "n": 2, "rho": 1.0, "alpha": 0.1,
                                 "samples": 300, "seed": 5, "N": 8})
    assert rep["passed"]


def test_appendix_unknown_lemma():
    with pytest.raises(ValueError):
        check_appendix_lemmas({"lemma": "B.7", "alpha": 0.1})
