"""Tests for circlewalk.cyclic: exact walk laws on Z_q via spectral powering,
discrepancy/TV metrics, certified bounds, transition scans, and the
continuous Kolmogorov distance.

Oracles: direct O(q^2 k) dynamic programming for walk laws, O(q^2) interval
enumeration for the cyclic-interval discrepancy, dictionary convolution plus
dense-grid sup for the continuous distance.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlewalk.dioph import Rational, bad_approx_constant_rational, golden_alpha
from circlewalk.errors import (
    InvalidProbability,
    SpanNotCoprime,
    SpectralCorruption,
    SupportTooLarge,
)
from circlewalk.steps import char_fn, new_step_distribution, step_preset
from circlewalk.cyclic import (
    SpectralState,
    advance,
    berry_esseen_bound,
    default_k_grid,
    kolmogorov_continuous,
    lower_bounds,
    new_cyclic_distribution,
    one_step_spectrum,
    psi_disc,
    psi_disc_star,
    psi_tv,
    reduce_to_unit_span,
    to_distribution,
    transition_scan,
    tv_lower_bound,
    tv_upper_bound,
)

from oracles import (
    integer_walk_law,
    kolmogorov_dense_grid,
    psi_disc_brute,
    psi_star_brute,
    psi_tv_brute,
    walk_law_dp,
)

TOL_EXACT = 1e-12
TOL_ORACLE = 1e-10

U12 = [(1, 0.5), (2, 0.5)]
U13 = [(1, 0.5), (3, 0.5)]


def prob_vectors(max_q=24):
    return (
        st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=max_q)
        .map(lambda w: (np.array(w) / np.sum(w)).tolist())
    )


# ------------------------------------------------------------------ reduction


def test_reduce_identity_when_span_one():
    sd = new_step_distribution(U12)
    r = Rational(1, 7)
    sd2, r2 = reduce_to_unit_span(sd, r)
    assert sd2 is sd and r2 == r


def test_reduce_uniform13_mod5():
    sd2, r2 = reduce_to_unit_span(new_step_distribution(U13), Rational(1, 5))
    assert sd2.atoms == ((0, 0.5), (1, 0.5))
    assert r2 == Rational(2, 5)


def test_reduce_span_not_coprime():
    with pytest.raises(SpanNotCoprime):
        reduce_to_unit_span(new_step_distribution(U13), Rational(1, 4))


# -------------------------------------------------------------- spectral state


def test_one_step_spectrum_frozen():
    sd = new_step_distribution(U12)
    s = one_step_spectrum(sd, Rational(1, 2))
    assert s.k == 1 and s.q == 2
    assert s.spectrum[0] == 1.0 + 0.0j
    assert abs(s.spectrum[1]) < TOL_EXACT
    s = one_step_spectrum(sd, Rational(1, 3))
    assert s.spectrum[1] == pytest.approx(-0.5 + 0.0j, abs=TOL_EXACT)
    assert s.spectrum[2] == pytest.approx(-0.5 + 0.0j, abs=TOL_EXACT)


def test_one_step_spectrum_reduces_angles_exactly():
    # h*p reduced mod q in integers first: entries are exactly periodic
    sd = new_step_distribution(U12)
    s = one_step_spectrum(sd, Rational(144, 233))
    for h in [1, 5, 89]:
        expected = char_fn(sd, 2.0 * math.pi * ((h * 144) % 233) / 233.0)
        assert s.spectrum[h] == pytest.approx(expected, abs=TOL_EXACT)


def test_advance_identity_and_semigroup():
    sd = new_step_distribution(U12)
    s = one_step_spectrum(sd, Rational(2, 7))
    assert np.allclose(advance(s, 0).spectrum, s.spectrum, atol=TOL_EXACT)
    a = advance(advance(s, 3), 5)
    b = advance(s, 8)
    assert a.k == b.k == 9
    assert np.max(np.abs(a.spectrum - b.spectrum)) < 1e-10
    with pytest.raises(ValueError):
        advance(s, -1)


def test_advance_squares_frozen():
    sd = new_step_distribution(U12)
    s = advance(one_step_spectrum(sd, Rational(1, 3)), 1)
    assert s.k == 2
    assert s.spectrum[1] == pytest.approx(0.25 + 0.0j, abs=TOL_EXACT)


def test_to_distribution_frozen_examples():
    sd = new_step_distribution(U12)
    # k=0: all-ones spectrum -> point mass at 0
    s0 = advance(one_step_spectrum(sd, Rational(1, 4)), 0)
    zero = SpectralState(
        q=4, k=0, spectrum=np.ones(4, dtype=complex), base=s0.base
    )
    assert np.allclose(to_distribution(zero).probs, [1, 0, 0, 0], atol=1e-12)
    d = to_distribution(one_step_spectrum(sd, Rational(1, 2)))
    assert np.allclose(d.probs, [0.5, 0.5], atol=1e-12)
    d = to_distribution(one_step_spectrum(sd, Rational(1, 3)))
    assert np.allclose(d.probs, [0.0, 0.5, 0.5], atol=1e-12)
    d = to_distribution(advance(one_step_spectrum(sd, Rational(1, 3)), 1))
    assert np.allclose(d.probs, [0.5, 0.25, 0.25], atol=1e-12)


def test_to_distribution_corruption_detected():
    base = np.ones(4, dtype=complex)
    bad = SpectralState(q=4, k=1, spectrum=np.array([1, 2.0, 0, 0], dtype=complex), base=base)
    with pytest.raises(SpectralCorruption):
        to_distribution(bad)
    bad = SpectralState(q=3, k=1, spectrum=np.array([1, 1j, 0], dtype=complex), base=base[:3])
    with pytest.raises(SpectralCorruption):
        to_distribution(bad)


def test_spectral_matches_dp_oracle():
    cases = [
        (U12, 5, 1, 7),
        (U12, 13, 5, 16),
        (U12, 64, 63, 32),
        (U13, 7, 3, 9),
        ([(0, 0.3), (1, 0.2), (5, 0.5)], 11, 4, 12),
    ]
    for pairs, q, p, k in cases:
        sd = new_step_distribution(pairs)
        law = walk_law_dp(sd, p, q, k)
        state = advance(one_step_spectrum(sd, Rational(p, q)), k - 1)
        assert state.k == k
        got = to_distribution(state).probs
        assert np.max(np.abs(got - law)) < TOL_ORACLE


# -------------------------------------------------------------------- metrics


def test_psi_disc_frozen():
    assert psi_disc(new_cyclic_distribution([0.0, 0.5, 0.5])) == pytest.approx(
        1.0 / 3.0, abs=TOL_EXACT
    )
    assert psi_disc(new_cyclic_distribution([1.0, 0.0, 0.0, 0.0])) == pytest.approx(
        0.75, abs=TOL_EXACT
    )
    assert psi_disc(new_cyclic_distribution([0.25] * 4)) == pytest.approx(0.0, abs=TOL_EXACT)


def test_psi_disc_star_frozen():
    assert psi_disc_star(new_cyclic_distribution([0.0, 0.5, 0.5])) == pytest.approx(
        1.0 / 3.0, abs=TOL_EXACT
    )
    assert psi_disc_star(new_cyclic_distribution([0.2] * 5)) == pytest.approx(
        0.0, abs=TOL_EXACT
    )


def test_psi_tv_frozen():
    assert psi_tv(new_cyclic_distribution([0.0, 0.5, 0.5])) == pytest.approx(
        1.0 / 3.0, abs=TOL_EXACT
    )
    assert psi_tv(new_cyclic_distribution([1.0, 0.0])) == pytest.approx(0.5, abs=TOL_EXACT)


@given(prob_vectors())
@settings(max_examples=150)
def test_metrics_match_brute_oracles(probs):
    dist = new_cyclic_distribution(probs)
    assert psi_disc(dist) == pytest.approx(psi_disc_brute(probs), abs=1e-10)
    assert psi_disc_star(dist) == pytest.approx(psi_star_brute(probs), abs=1e-10)
    assert psi_tv(dist) == pytest.approx(psi_tv_brute(probs), abs=1e-10)


@given(prob_vectors())
@settings(max_examples=150)
def test_interval_metric_sandwich(probs):
    dist = new_cyclic_distribution(probs)
    a, b = psi_disc(dist), psi_disc_star(dist)
    assert a <= b + TOL_EXACT
    assert b <= 2 * a + TOL_EXACT


def test_psi_star_translation_invariant():
    # shifting all step atoms by a constant only rotates the walk law
    q, p, k = 13, 5, 9
    base = new_step_distribution(U12)
    shifted = new_step_distribution([(1 + 4, 0.5), (2 + 4, 0.5)])
    d1 = to_distribution(advance(one_step_spectrum(base, Rational(p, q)), k - 1))
    d2 = to_distribution(advance(one_step_spectrum(shifted, Rational(p, q)), k - 1))
    assert psi_disc_star(d1) == pytest.approx(psi_disc_star(d2), abs=1e-10)


def test_discrete_koksma_inequality_random_trials():
    # |E f(X) - E f(Y)| <= (path total variation of f) * max_a |CDF_X - CDF_Y|
    rng = np.random.default_rng(12345)
    for _ in range(200):
        q = int(rng.integers(2, 40))
        f = rng.normal(size=q) + 1j * rng.normal(size=q)
        mu = rng.random(q)
        mu /= mu.sum()
        nu = rng.random(q)
        nu /= nu.sum()
        lhs = abs(np.sum(f * (mu - nu)))
        vq = np.sum(np.abs(np.diff(f)))
        rhs = vq * np.max(np.abs(np.cumsum(mu) - np.cumsum(nu)))
        assert lhs <= rhs + 1e-9


def test_cyclic_distribution_validation():
    with pytest.raises(InvalidProbability):
        new_cyclic_distribution([0.5, 0.4])
    with pytest.raises(InvalidProbability):
        new_cyclic_distribution([1.1, -0.1])
    d = new_cyclic_distribution([0.5, 0.5 + 1e-13, -1e-13])
    assert np.all(d.probs >= 0.0)


# --------------------------------------------------------------------- bounds


def test_berry_esseen_frozen():
    sd = new_step_distribution(U12)
    assert berry_esseen_bound(sd, Rational(1, 2), 1) == pytest.approx(0.0, abs=TOL_EXACT)
    assert berry_esseen_bound(sd, Rational(1, 3), 1) == pytest.approx(0.5, abs=TOL_EXACT)
    assert berry_esseen_bound(sd, Rational(1, 3), 1) >= 1.0 / 3.0


def test_tv_bounds_frozen():
    sd = new_step_distribution(U12)
    assert tv_upper_bound(sd, Rational(1, 2), 1) == pytest.approx(0.0, abs=TOL_EXACT)
    assert tv_upper_bound(sd, Rational(1, 3), 1) == pytest.approx(
        math.sqrt(1.0 / 8.0), abs=TOL_EXACT
    )
    assert tv_lower_bound(sd, Rational(1, 2), 5) == pytest.approx(0.0, abs=TOL_EXACT)
    assert tv_lower_bound(sd, Rational(1, 3), 2) == pytest.approx(1.0 / 8.0, abs=TOL_EXACT)
    # exact psi_tv at q=3, k=2 is 1/6 >= 1/8
    d = to_distribution(advance(one_step_spectrum(sd, Rational(1, 3)), 1))
    assert psi_tv(d) == pytest.approx(1.0 / 6.0, abs=TOL_EXACT)
    assert tv_lower_bound(sd, Rational(1, 3), 2) <= psi_tv(d)


def test_lower_bounds_frozen():
    sd = new_step_distribution(U12)
    lb_spec, lb_atom = lower_bounds(sd, Rational(1, 2), 3)
    assert lb_spec == pytest.approx(0.0, abs=TOL_EXACT)
    lb_spec, lb_atom = lower_bounds(sd, Rational(144, 233), 100)
    assert lb_atom == pytest.approx(1.0 / (12.0 * math.sqrt(75.0) + 6.0), abs=TOL_EXACT)
    assert lb_spec == pytest.approx(
        abs(math.cos(math.pi / 233.0)) ** 100 / (2.0 * 232.0), rel=1e-12
    )
    # validity window: k <= (q-3)^2 / (108 Var) = 52900/27 ~ 1959.26
    assert lower_bounds(sd, Rational(144, 233), 1959)[1] is not None
    assert lower_bounds(sd, Rational(144, 233), 1960)[1] is None


def test_bound_sandwich_small_instances():
    sd = new_step_distribution(U12)
    for q, p in [(3, 1), (5, 2), (13, 5), (89, 55)]:
        state = one_step_spectrum(sd, Rational(p, q))
        for k in range(1, 40):
            d = to_distribution(state)
            val = psi_disc(d)
            lb_spec, lb_atom = lower_bounds(sd, Rational(p, q), k)
            assert lb_spec <= val + 1e-12
            if lb_atom is not None:
                assert lb_atom <= val + 1e-12
            assert val <= berry_esseen_bound(sd, Rational(p, q), k) + 1e-12
            tv = psi_tv(d)
            assert tv_lower_bound(sd, Rational(p, q), k) <= tv + 1e-12
            assert tv <= tv_upper_bound(sd, Rational(p, q), k) + 1e-12
            state = advance(state, 1)


# ------------------------------------------------------------- transition scan


def test_default_k_grid_shape():
    grid = default_k_grid(13)
    assert grid[0] == 1
    assert set(range(1, 65)).issubset(grid)
    assert 13 * 13 in grid
    assert 8 * 13 * 13 in grid
    assert grid[-1] == 8 * 13 * 13
    assert all(grid[i] < grid[i + 1] for i in range(len(grid) - 1))


def test_transition_scan_small_instance():
    sd = new_step_distribution(U12)
    scan = transition_scan(sd, Rational(5, 13))
    ks = scan.k_values
    q2 = 169
    assert ks[-1] == 8 * q2
    # meta carries the derived constants
    for key in ("A", "c", "r", "tau", "q", "p"):
        assert key in scan.meta
    assert scan.meta["q"] == 13 and scan.meta["p"] == 5
    assert scan.meta["A"] == pytest.approx(bad_approx_constant_rational(Rational(5, 13)))
    assert scan.meta["c"] == pytest.approx(2 * math.pi**2 * 0.25)
    # psi* nonincreasing along the grid
    star = scan.values("psi_disc_star")
    assert all(star[i + 1] <= star[i] + 1e-12 for i in range(len(star) - 1))
    # certified sandwiches pointwise
    psi = scan.values("psi_disc")
    tv = scan.values("psi_tv")
    be = scan.values("be_bound")
    tvub = scan.values("tv_ub")
    lbs = scan.values("lb_spectral")
    lba = scan.values("lb_atom")
    tvlb = scan.values("tv_lb")
    for i in range(len(ks)):
        assert lbs[i] <= psi[i] + 1e-12
        if not math.isnan(lba[i]):
            assert lba[i] <= psi[i] + 1e-12
        assert psi[i] <= be[i] + 1e-12
        assert tvlb[i] <= tv[i] + 1e-12
        assert tv[i] <= tvub[i] + 1e-12
    # normalized series live in their regimes, k = q^2 in both
    npoly = scan.values("norm_poly")
    nexp = scan.values("norm_exp")
    for i, k in enumerate(ks):
        assert math.isnan(npoly[i]) == (k > q2)
        assert math.isnan(nexp[i]) == (k < q2)
        if k <= q2:
            assert npoly[i] == pytest.approx(math.sqrt(k) * psi[i], rel=1e-12)


def test_transition_scan_matches_direct_metrics():
    sd = new_step_distribution(U12)
    scan = transition_scan(sd, Rational(2, 7), k_grid=[1, 2, 3, 10, 50])
    for i, k in enumerate(scan.k_values):
        law = walk_law_dp(sd, 2, 7, k)
        assert scan.values("psi_disc")[i] == pytest.approx(psi_disc_brute(law), abs=1e-9)
        assert scan.values("psi_tv")[i] == pytest.approx(psi_tv_brute(law), abs=1e-9)


def test_transition_scan_crosses_resync_boundary():
    sd = new_step_distribution(U12)
    scan = transition_scan(sd, Rational(1, 5), k_grid=[1, 65535, 65536, 70000])
    assert list(scan.k_values) == [1, 65535, 65536, 70000]
    # far past mixing: psi values collapse to zero
    assert scan.values("psi_disc")[-1] == pytest.approx(0.0, abs=1e-15)


def test_transition_scan_series_view():
    sd = new_step_distribution(U12)
    scan = transition_scan(sd, Rational(5, 13), k_grid=[1, 169, 200])
    series = scan.series("norm_exp")
    assert series.metric == "norm_exp"
    assert list(series.k_values) == [169, 200]
    assert len(series.values) == 2
    assert series.meta["q"] == 13


def test_transition_scan_rejects_bad_span():
    with pytest.raises(SpanNotCoprime):
        transition_scan(new_step_distribution(U13), Rational(1, 4), k_grid=[1, 2])


# -------------------------------------------------- continuous Kolmogorov distance


def test_kolmogorov_continuous_degenerate_start():
    sd = new_step_distribution(U12)
    assert kolmogorov_continuous(sd, golden_alpha(), 0) == 1.0


def test_kolmogorov_continuous_one_step_frozen():
    # atoms at {alpha} = 0.618..., {2 alpha} = 0.236..., each mass 1/2;
    # sup candidates: max(.264, .382, .236, .118) = 1 - {alpha}
    sd = new_step_distribution(U12)
    val = kolmogorov_continuous(sd, golden_alpha(), 1)
    assert val == pytest.approx(0.3819660112501051, abs=1e-12)


def test_kolmogorov_continuous_matches_dense_oracle():
    sd = new_step_distribution(U12)
    alpha = golden_alpha()
    for k in [2, 3, 6, 11]:
        law = integer_walk_law(sd, k)
        ns = sorted(law)
        xs = [((n * alpha.scaled) % (1 << alpha.frac_bits)) / float(1 << alpha.frac_bits) for n in ns]
        oracle = kolmogorov_dense_grid(xs, [law[n] for n in ns])
        assert kolmogorov_continuous(sd, alpha, k) == pytest.approx(oracle, abs=1e-4)


def test_kolmogorov_continuous_tail_trimming_is_conservative():
    sd = new_step_distribution(U12)
    alpha = golden_alpha()
    exact = kolmogorov_continuous(sd, alpha, 40)
    eps = 1e-6
    trimmed = kolmogorov_continuous(sd, alpha, 40, tail_eps=eps)
    assert exact <= trimmed <= exact + 2 * eps


def test_kolmogorov_continuous_support_cap():
    sd = new_step_distribution([(0, 0.5), (1 << 20, 0.5)])
    with pytest.raises(SupportTooLarge):
        kolmogorov_continuous(sd, golden_alpha(), 32)
    with pytest.raises(ValueError):
        kolmogorov_continuous(sd, golden_alpha(), -1)
