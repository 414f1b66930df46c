from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.spatial import distance

from helpers import SUBCLASS, make_store
from rspace import ResourceSpace, dimension_from_notation
from rspace.linkstats import (
    BOUNDED,
    GENERAL,
    LOGISTIC,
    PROB_EPS,
    Covariance2,
    LinkPolicy,
    RunningMoments,
    WeightVector,
    chi2_threshold,
    covariance_inverse,
    covariance_samples,
    expected_links,
    link_probability,
    mahalanobis,
    path_samples,
    sample_link,
    weight_vector,
)

LOG = LinkPolicy(LOGISTIC)
BND = LinkPolicy(BOUNDED)


def p_logistic(x):
    return 1.0 / (1.0 + math.exp(-x))


def p_bounded(x):
    # written out directly, no shared helpers with the package
    ex = math.exp(x)
    return ex / (2.0 * (1.0 + ex) * math.sqrt(math.log(1.0 + ex)))


def p_general(x, a):
    ex = math.exp(x)
    return ex / ((1.0 + ex) * a * math.log(1.0 + ex) ** (1.0 - 1.0 / a))


# -- policies --------------------------------------------------------------------------


def test_policy_parse_and_str():
    assert LinkPolicy.parse("logistic").exponent == 1.0
    assert LinkPolicy.parse("BOUNDED").exponent == 2.0
    g = LinkPolicy.parse("general:3", 5)
    assert g.variant == GENERAL and g.exponent == 3.0 and g.rng_seed == 5
    for p in (LOG, BND, g):
        assert LinkPolicy.parse(str(p)) == LinkPolicy(p.variant, p.a)
    for bad in ("nope", "general", "general:1", "general:x"):
        with pytest.raises(ValueError):
            LinkPolicy.parse(bad)


# -- probabilities ---------------------------------------------------------------------


def test_probability_examples():
    assert link_probability(0.0, LOG) == 0.5
    assert link_probability(math.log(3.0), LOG) == pytest.approx(0.75, abs=1e-15)
    assert link_probability(0.0, BND) == pytest.approx(1.0 / (4.0 * math.sqrt(math.log(2.0))), abs=1e-12)
    assert link_probability(0.0, BND) == pytest.approx(0.3003, abs=1e-4)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 7.0, 15.0, 30.0])
def test_probability_matches_direct_formula(x):
    assert link_probability(x, LOG) == pytest.approx(p_logistic(x), rel=1e-12)
    assert link_probability(x, BND) == pytest.approx(p_bounded(x), rel=1e-12)
    assert link_probability(x, LinkPolicy(GENERAL, 3.0)) == pytest.approx(p_general(x, 3.0), rel=1e-12)


def test_probability_clamped_and_rejects_negative():
    assert link_probability(1e6, LOG) == 1.0 - PROB_EPS
    assert link_probability(1e6, BND) >= PROB_EPS
    assert link_probability(2.0, LOG, clamp=(0.0, 0.0)) == 0.0
    with pytest.raises(ValueError):
        link_probability(-1.0, LOG)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 700.0), st.sampled_from([1.0, 2.0, 3.0, 5.5]))
def test_probability_is_a_probability(x, a):
    pol = LOG if a == 1.0 else LinkPolicy(GENERAL, a)
    p = link_probability(x, pol)
    assert PROB_EPS <= p <= 1.0 - PROB_EPS


# -- expected links ---------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 5, 10, 20])
@pytest.mark.parametrize("pol,f", [(LOG, p_logistic), (BND, p_bounded)])
def test_expected_links_matches_quadrature(n, pol, f):
    val, _ = integrate.quad(f, 0.0, n, epsabs=1e-12, epsrel=1e-12, limit=200)
    assert abs(expected_links(n, pol) - val) < 1e-6


@pytest.mark.parametrize("n", [0.5, 3.0, 12.0])
def test_expected_links_derivative_is_probability(n):
    h = 1e-5
    for pol in (LOG, BND, LinkPolicy(GENERAL, 4.0)):
        fd = (expected_links(n + h, pol) - expected_links(n - h, pol)) / (2 * h)
        assert fd == pytest.approx(link_probability(n, pol), rel=1e-6)


def test_expected_links_examples():
    assert expected_links(0.0, LOG) == 0.0
    assert expected_links(0.0, BND) == 0.0
    assert expected_links(10.0, LOG) == pytest.approx(9.3069, abs=1e-4)
    for n in (1e4, 1e6, 1e8):
        assert expected_links(n, BND) / math.sqrt(n) == pytest.approx(1.0, abs=0.01)
    assert expected_links(10.0, BND) < expected_links(10.0, LOG)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 500.0), st.floats(0.0, 10.0))
def test_expected_links_monotone_and_ordered(n, dn):
    for pol in (LOG, BND):
        assert expected_links(n + dn, pol) >= expected_links(n, pol)
    assert expected_links(n, BND) < expected_links(n, LOG)


# -- chi-square ----------------------------------------------------------------------


def test_chi2_examples():
    assert chi2_threshold(2, 0.05) == pytest.approx(5.99, abs=0.01)
    assert chi2_threshold(1, 0.05) == pytest.approx(3.841, abs=1e-3)
    # two degrees of freedom has the closed form -2 ln(alpha)
    for alpha in (0.5, 0.1, 0.01):
        assert chi2_threshold(2, alpha) == pytest.approx(-2.0 * math.log(alpha), rel=1e-9)
    assert chi2_threshold(2, 1 - 1e-12) < 1e-9
    for bad in ((0, 0.05), (2, 0.0), (2, 1.0), (1.5, 0.1)):
        with pytest.raises(ValueError):
            chi2_threshold(*bad)


# -- sampling ----------------------------------------------------------------------------


def _freq(x, pol, n, seed, clamp=None):
    rng = np.random.default_rng(seed)
    return sum(sample_link(x, pol, rng, clamp) for _ in range(n)) / n


def test_sample_link_large_distance_almost_always():
    assert _freq(50.0, LOG, 10_000, 1) > 0.99


def test_sample_link_clamped_to_zero_never_fires():
    assert _freq(50.0, LOG, 2000, 2, clamp=(0.0, 0.0)) == 0.0


def test_sample_link_at_zero_within_three_sigma():
    n = 10_000
    f = _freq(0.0, LOG, n, 3)
    assert abs(f - 0.5) <= 3 * math.sqrt(0.25 / n)
    p = link_probability(0.0, BND)
    f = _freq(0.0, BND, n, 4)
    assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_sample_link_reproducible():
    a = [sample_link(0.7, BND, np.random.default_rng(9)) for _ in range(5)]
    b = [sample_link(0.7, BND, np.random.default_rng(9)) for _ in range(5)]
    assert a == b


# -- covariance and distance ---------------------------------------------------------------


def test_rank_one_samples_get_a_ridge():
    cov = covariance_inverse([WeightVector(0, 0), WeightVector(1, 1)])
    assert cov.ridge > 0
    assert np.all(np.isfinite(cov.inverse))
    zero = Covariance2.from_matrix(np.zeros((2, 2)))
    assert zero.ridge > 0 and np.all(np.isfinite(zero.inverse))


def test_identity_covariance_gives_identity_inverse():
    # four points at (+-1, +-1) scaled so the N-1 covariance is exactly I
    s = math.sqrt(3.0) / 2.0
    pts = [WeightVector(0.5 + s * dx / 2, 10 + s * dy) for dx, dy in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
    cov = covariance_inverse(pts)
    assert np.allclose(cov.entries, np.diag([0.25, 1.0]))
    assert np.allclose(cov.inverse @ cov.entries, np.eye(2))


def test_covariance_matches_numpy():
    rng = np.random.default_rng(0)
    ws = [WeightVector(float(a), float(b)) for a, b in zip(rng.random(40), rng.integers(0, 500, 40))]
    cov = covariance_inverse(ws)
    ref = np.cov(np.array([w.as_tuple() for w in ws]).T)
    assert np.allclose(cov.entries, ref)
    with pytest.raises(ValueError):
        covariance_inverse(ws[:1])


def test_mahalanobis_examples():
    ident = Covariance2(np.eye(2), np.eye(2))
    w = WeightVector(0.25, 7)
    assert mahalanobis(w, w, ident) == 0.0
    assert mahalanobis(WeightVector(0, 0), WeightVector(0.6, 0.8), ident) == pytest.approx(1.0)
    big = Covariance2(np.diag([1.0, 1.0]), np.diag([1.0, 1.0]))
    assert mahalanobis(WeightVector(0, 0), WeightVector(1.0, 0), big) == 1.0


def test_mahalanobis_euclidean_reduction():
    ident = Covariance2(np.eye(2), np.eye(2))
    # levels are bounded to [0, 1], so scale the 3-4-5 triangle into range
    assert mahalanobis(WeightVector(0, 0), WeightVector(0.3, 0.4), ident) == pytest.approx(0.5)
    assert mahalanobis(WeightVector(0, 0), WeightVector(0, 5), ident) == pytest.approx(5.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_mahalanobis_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    ws = [WeightVector(float(a), float(b)) for a, b in zip(rng.random(12), rng.integers(0, 1000, 12))]
    cov = covariance_inverse(ws)
    u, v = ws[0], ws[1]
    ref = distance.mahalanobis(u.as_tuple(), v.as_tuple(), cov.inverse)
    assert mahalanobis(u, v, cov) == pytest.approx(ref, rel=1e-9, abs=1e-12)


# -- weight vectors and samples ----------------------------------------------------------------


def _depth4_space():
    d = dimension_from_notation("t(a(b(c(d, e)), f), g)", [SUBCLASS])
    return d, ResourceSpace("S", [d])


def test_weight_vector_root_leaf_and_mid():
    d, sp = _depth4_space()
    placements = [(["t/a/b/c/d"], {})] * 2 + [(["t/g"], {})] * 98
    st_ = make_store(sp, placements)
    assert weight_vector(d, d.root, st_).as_tuple() == (0.0, 100.0)
    assert weight_vector(d, d.require("t/a/b/c/d"), st_).as_tuple() == (1.0, 2.0)
    mid = d.require("t/a/b")
    scan = sum(1 for r in st_.resources() if r.point["t"].is_under(mid))
    assert weight_vector(d, mid, st_).as_tuple() == (2 / 4, float(scan))
    with pytest.raises(ValueError):
        WeightVector(1.5, 0)


def test_path_samples_on_hand_tree():
    d = dimension_from_notation("t(A(B, C), D(E))", [SUBCLASS])
    sp = ResourceSpace("S", [d])
    st_ = make_store(sp, [(["t/A/B"], {})] * 3 + [(["t/A/C"], {})] + [(["t/D/E"], {})] * 2)
    samples = path_samples(d, st_)
    # heaviest path t-A-B (6+4+3), lightest t-D-E (6+2+2)
    assert [w.as_tuple() for w in samples] == [(0.0, 6.0), (0.5, 4.0), (1.0, 3.0), (0.5, 2.0), (1.0, 2.0)]
    cov = covariance_inverse(samples)
    assert np.allclose(cov.entries, [[0.175, -0.55], [-0.55, 2.8]])
    assert cov.ridge == 0.0


def test_covariance_samples_switch_to_paths_above_limit():
    d = dimension_from_notation("t(A(B, C), D(E))", [SUBCLASS])
    sp = ResourceSpace("S", [d])
    st_ = make_store(sp, [(["t/A/B"], {})])
    assert len(covariance_samples([d], st_)) == 6
    assert len(covariance_samples([d], st_, limit=3)) == len(path_samples(d, st_))


def test_running_moments_match_batch():
    d1 = dimension_from_notation("x(a(b, c), d)", [SUBCLASS])
    d2 = dimension_from_notation("y(e, f(g))", [SUBCLASS])
    sp = ResourceSpace("S", [d1, d2])
    st_ = make_store(sp, [])
    m1, m2 = RunningMoments(d1, st_), RunningMoments(d2, st_)
    rng = np.random.default_rng(4)
    placements = []
    for _ in range(30):
        c1 = d1.coordinates[int(rng.integers(len(d1)))]
        c2 = d2.coordinates[int(rng.integers(len(d2)))]
        placements.append(([c1, c2], {}))
        for a in c1.ancestors():
            m1.bump(a)
        for a in c2.ancestors():
            m2.bump(a)
    st2 = make_store(sp, placements)
    batch = covariance_inverse([weight_vector(d, c, st2) for d in (d1, d2) for c in d.coordinates])
    inc = RunningMoments.covariance([m1, m2])
    assert np.allclose(inc.entries, batch.entries)
    assert np.allclose(inc.inverse, batch.inverse)
