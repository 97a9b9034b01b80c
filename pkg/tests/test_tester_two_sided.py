import math

import numpy as np
import pytest
from scipy.special import ndtr

from convexity_testbed.convex import EmptySet, Hull, Stripe
from convexity_testbed.grid import GridParams, generate_cover
from convexity_testbed.lp import in_hull
from convexity_testbed.tester_two_sided import (LearnConfig, holdout_sample_count, ggr_test,
                                                proper_learn_via_cover)

P1 = GridParams(1, 0.2, ell=0.5, n_prime=2.0)


@pytest.fixture(scope="module")
def cover():
    return generate_cover(P1)


def interval_distance(a: Hull, b: Hull) -> float:
    """Exact Gaussian mass of the symmetric difference of two 1D hulls."""
    def mass(lo, hi):
        return max(float(ndtr(hi) - ndtr(lo)), 0.0)

    def ends(h):
        return (None, None) if h.is_empty else (h.vertices[0, 0], h.vertices[-1, 0])

    (a0, a1), (b0, b1) = ends(a), ends(b)
    if a0 is None and b0 is None:
        return 0.0
    if a0 is None:
        return mass(b0, b1)
    if b0 is None:
        return mass(a0, a1)
    inter = mass(max(a0, b0), min(a1, b1)) if max(a0, b0) < min(a1, b1) else 0.0
    return mass(a0, a1) + mass(b0, b1) - 2 * inter


def test_config_validation():
    with pytest.raises(ValueError):
        LearnConfig(0.0, 0.1)
    with pytest.raises(ValueError):
        LearnConfig(0.1, 1.0)
    with pytest.raises(ValueError):
        LearnConfig(0.1, 0.1, learn_samples=0)
    cfg = LearnConfig(0.1, 0.1)
    assert cfg.learn_budget(154) == math.ceil((math.log(154) + math.log(10)) / 0.1)
    assert cfg.estimate_budget(154) == math.ceil(math.log(4 * 154 / 0.1) * 50 / 0.01)


def test_empty_target_learns_empty(cover):
    res = proper_learn_via_cover(EmptySet(1), LearnConfig(0.1, 0.1), P1, 0, cover)
    assert res.hypothesis.is_empty and res.empirical_error == 0.0
    assert res.candidates_scored == len(cover)


def test_erm_dominance_and_properness(cover):
    res = proper_learn_via_cover(Stripe(1, 3), LearnConfig(0.1, 0.1), P1, 4, cover)
    assert res.empirical_error == pytest.approx(res.errors.min())
    assert np.all(res.errors >= res.empirical_error)
    assert any(res.hypothesis.vertex_key == h.vertex_key for h in cover)
    # randomized segment witness: midpoints of member pairs stay members
    rng = np.random.default_rng(0)
    X = rng.uniform(-5, 5, (400, 1))
    inside = X[res.hypothesis.contains(X)]
    if len(inside) >= 2:
        i, j = rng.integers(len(inside), size=(2, 200))
        lam = rng.random((200, 1))
        assert res.hypothesis.contains(lam * inside[i] + (1 - lam) * inside[j]).all()


def test_erm_dominance_in_two_dimensions():
    p = GridParams(2, 0.2, ell=0.8, n_prime=0.5)
    cov = generate_cover(p)
    res = proper_learn_via_cover(Stripe(2, 2), LearnConfig(0.2, 0.1), p, 1, cov)
    assert np.all(res.errors >= res.empirical_error)
    hv = res.hypothesis.vertices
    if len(hv):
        for v in hv:
            assert in_hull(hv, v)


def test_realizable_recovery(cover):
    target = cover[40]
    res = proper_learn_via_cover(target, LearnConfig(0.1, 0.1, learn_samples=2000), P1, 2, cover)
    assert interval_distance(res.hypothesis, target) <= 0.1


def test_two_stage_chaining(cover):
    eps = 0.2
    cfg = LearnConfig(eps, 0.1, learn_samples=3000, estimate_samples=20000, two_stage=True)
    checked = 0
    for seed, k in enumerate([10, 40, 77, 120, 150]):
        target = cover[k]
        res = proper_learn_via_cover(target, cfg, P1, seed, cover)
        H = res.stage_one
        # premises: H is eps/5-close to S, and S is itself a cover element
        if interval_distance(H, target) > eps / 5:
            continue
        checked += 1
        assert interval_distance(H, res.hypothesis) <= 4 * eps / 5
    assert checked >= 3


def test_stripe_rejected(cover):
    target = Stripe(1, 5)
    assert target.far_from_convex_lower_bound() > 0.3
    cfg = LearnConfig(0.3, 0.1)
    rejects = sum(ggr_test(target, cfg, P1, s, cover=cover).rejected for s in range(30))
    assert rejects / 30 >= 2 / 3


def test_cover_element_accepted(cover):
    cfg = LearnConfig(0.3, 0.1)
    accepts = sum(not ggr_test(cover[60], cfg, P1, s, cover=cover).rejected for s in range(30))
    assert accepts / 30 >= 2 / 3


def test_threshold_monotone_in_disagreement(cover):
    cfg = LearnConfig(0.3, 0.1)
    verdicts = [ggr_test(Stripe(1, k), cfg, P1, k, cover=cover) for k in range(1, 8)]
    pairs = sorted((v.details["disagreement"], v.rejected) for v in verdicts)
    flags = [r for _, r in pairs]
    # once rejecting, every larger disagreement also rejects
    assert flags == sorted(flags)
    for d, r in pairs:
        assert r == (d > 0.75 * cfg.epsilon)


def test_acceptance_improves_with_budget(cover):
    target = cover[60]
    freqs = []
    trials = 40
    for delta in (0.5, 0.1, 0.01):
        cfg = LearnConfig(0.2, delta)
        freqs.append(sum(not ggr_test(target, cfg, P1, 1000 + s, cover=cover).rejected
                         for s in range(trials)) / trials)
    for a, b in zip(freqs, freqs[1:]):
        sigma = math.sqrt(max(a * (1 - a), 1 / trials) / trials)
        assert b >= a - 4 * sigma


def test_holdout_count():
    assert holdout_sample_count(0.2, 0.1) == math.ceil(8 * math.log(20) / 0.2)
