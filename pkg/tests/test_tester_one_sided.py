import copy

import numpy as np
import pytest

from convexity_testbed.convex import Ball, EmptySet, FullSpace, Halfspace, Polytope, Stripe
from convexity_testbed.gauss import gaussian_mass_of_radial_band
from convexity_testbed.grid import GridParams, build_grid, default_n_prime
from convexity_testbed.tester_one_sided import (OneSidedConfig, run_a_prime, run_a_star, runs_for_power,
                                                truncate_labels, verify_certificate)

DESK = GridParams(2, 0.2, ell=0.027, n_prime=1.0)
COARSE = GridParams(2, 0.2, ell=0.1, n_prime=1.0)


@pytest.fixture(scope="module")
def desk_grid():
    return build_grid(DESK)


@pytest.fixture(scope="module")
def coarse_grid():
    return build_grid(COARSE)


def test_truncate_labels_rule():
    npr = 1.5
    X = np.array([[npr / 2, 0.0], [0.0, 2 * npr], [npr, 0.0]])
    out = truncate_labels(X, np.array([True, True, True]), npr)
    assert out.tolist() == [True, False, True]
    # negatives stay negative
    assert not truncate_labels(X[:1], np.array([False]), npr)[0]


@pytest.mark.parametrize("n,eps", [(1, 0.2), (2, 0.2), (2, 0.05), (5, 0.1), (10, 0.3)])
def test_default_nprime_ball_mass(n, eps):
    npr = default_n_prime(n, eps)
    assert gaussian_mass_of_radial_band(n, 0.0, npr) >= 1 - eps / 4


def test_config_validation_and_threshold():
    assert OneSidedConfig(DESK).threshold == pytest.approx(0.05)
    assert OneSidedConfig(DESK, reject_threshold=0.1).threshold == 0.1
    with pytest.raises(ValueError):
        OneSidedConfig(DESK, s=0)
    with pytest.raises(ValueError):
        OneSidedConfig(DESK, runs=0)


def test_full_space_accepts(desk_grid):
    v = run_a_star(FullSpace(2), OneSidedConfig(DESK), 1, desk_grid)
    assert not v.rejected
    assert v.reason in ("fresh_point_positive", "fresh_point_outside_hull")
    # truncation makes the rim of Ball(n') the only boundary
    assert 0 < v.details["bc_mass"] < 0.05


def test_empty_set_accepts(coarse_grid):
    v = run_a_star(EmptySet(2), OneSidedConfig(COARSE), 2, coarse_grid)
    assert not v.rejected


def test_starved_budget_accepts_early(coarse_grid):
    v = run_a_star(Stripe(2, 5), OneSidedConfig(COARSE, s=50), 3, coarse_grid)
    assert v.decision == "accept" and v.reason == "empty_cube"
    assert v.details["empty_cubes"] > 0


@pytest.mark.parametrize("target", [
    Ball(0.8, n=2),
    Ball(0.5, center=[0.3, -0.2]),
    Halfspace([1.0, 0.5], 0.2),
    Polytope([[1, 0], [-0.5, 0.9], [-0.5, -0.9]], [0.4, 0.5, 0.3]),
], ids=["ball", "offset_ball", "halfspace", "triangle"])
def test_convex_targets_never_reject(target, desk_grid):
    cfg = OneSidedConfig(DESK, runs=2)
    for seed in range(2):
        assert not run_a_prime(target, cfg, seed, desk_grid).rejected


def test_coarse_grid_breaks_mass_threshold(coarse_grid):
    # the eps/4 mass test is only sound once l is small enough; at l = 0.1
    # even a ball carries boundary mass above the threshold
    v = run_a_star(Ball(0.8, n=2), OneSidedConfig(COARSE), 0, coarse_grid)
    assert v.details["bc_mass"] > OneSidedConfig(COARSE).threshold


def test_stripe_rejects_with_verifiable_certificate(desk_grid):
    target = Stripe(2, 5)
    v = run_a_star(target, OneSidedConfig(DESK), 11, desk_grid)
    assert v.rejected and v.reason == "bc_mass_excess"
    cert = v.certificate
    assert cert["bc_mass"] >= cert["bound"]
    assert verify_certificate(cert, target, DESK)
    # the certificate is not valid for a convex set
    assert not verify_certificate(cert, Ball(0.9, n=2), DESK)


def test_hull_violation_path_verifies(desk_grid):
    target = Stripe(2, 5)
    cfg = OneSidedConfig(DESK, reject_threshold=1.0)
    found = None
    for seed in range(40):
        v = run_a_star(target, cfg, seed, desk_grid)
        if v.rejected:
            found = v
            break
    assert found is not None and found.reason == "hull_violation"
    assert verify_certificate(found.certificate, target, DESK)


def test_forged_certificates_fail():
    target = Stripe(2, 5)
    forged = {"kind": "hull_violation", "witness_point": [0.0, 0.0],
              "positive_generators": [[-3.0, 0.0], [3.0, 0.0]]}
    # (+-3, 0) are outside Ball(n') so their truncated labels are 0
    assert not verify_certificate(forged, target, DESK)
    bogus = {"kind": "bc_mass_excess", "bc_mass": 1.0, "bound": 0.05,
             "boundary_cubes": [[0, 0]], "positive_witnesses": [[0.0, 0.0]],
             "negative_witnesses": [[0.0, 0.0]]}
    assert not verify_certificate(bogus, target, DESK)
    assert not verify_certificate({"kind": "other"}, target, DESK)


def test_tampered_bc_certificate_fails(desk_grid):
    target = Stripe(2, 5)
    v = run_a_star(target, OneSidedConfig(DESK), 11, desk_grid)
    cert = copy.deepcopy(v.certificate)
    cert["boundary_cubes"] = cert["boundary_cubes"][:3]
    cert["positive_witnesses"] = cert["positive_witnesses"][:3]
    cert["negative_witnesses"] = cert["negative_witnesses"][:3]
    assert not verify_certificate(cert, target, DESK)


def test_determinism(coarse_grid):
    cfg = OneSidedConfig(COARSE, reject_threshold=1.0)
    a = run_a_star(Stripe(2, 5), cfg, 7, coarse_grid).to_dict()
    b = run_a_star(Stripe(2, 5), cfg, 7, coarse_grid).to_dict()
    assert a == b


def test_single_run_prime_matches_star_decision(coarse_grid):
    from convexity_testbed.gauss import spawn_seeds
    cfg = OneSidedConfig(COARSE, reject_threshold=1.0)
    for seed in range(5):
        child = spawn_seeds(seed, 1)[0]
        star = run_a_star(Stripe(2, 5), cfg, child, coarse_grid)
        prime = run_a_prime(Stripe(2, 5), cfg, seed, coarse_grid)
        assert star.decision == prime.decision


def test_runs_for_power():
    assert runs_for_power(1.0) == 1
    assert runs_for_power(0.5) == 2
    r = runs_for_power(0.19)
    assert 1 - (1 - 0.19) ** r >= 2 / 3 > 1 - (1 - 0.19) ** (r - 1)
    with pytest.raises(ValueError):
        runs_for_power(0.0)
