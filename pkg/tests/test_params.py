import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chemowave.errors import DomainError, NoRoot, NotApplicable, WindowUndefined
from chemowave.params import (ModelParams, WaveNumbers, admissible_window, chi_star,
                              constraint_values, denominator, is_admissible, m_tau,
                              mu_from_speed, mu_max, mu_star_limit, chi_bound_readings,
                              simple_chi_bound, wave_speed)

# brute-force minimum of max(G1, G2) on 1e6 uniform points, independent formula
M_TAU_SCAN = {0.5: 2.1908004756005224, 0.1: 1.2481811160770344,
              0.02: 1.0488251233771482, 0.004: 1.0097224881549385}


def test_params_validation():
    with pytest.raises(DomainError):
        ModelParams(0.0, 1.0, 0.1, 0.5)
    with pytest.raises(DomainError):
        ModelParams(1.0, 1.0, -0.1, 0.5)
    with pytest.raises(DomainError):
        ModelParams(1.0, float("nan"), 0.1, 0.5)


def test_wave_speed_examples():
    assert wave_speed(0.5, 1.0) == pytest.approx(2.5)
    assert wave_speed(1.0, 1.0) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        wave_speed(0.0, 1.0)


def test_mu_max_examples():
    assert mu_max(1.0, 1.0) == 1.0
    assert mu_max(1.0, 2.0) == 1.0
    assert mu_max(4.0, 0.25) == pytest.approx(math.sqrt(8 / 3))
    assert mu_max(0.5, 0.0) == pytest.approx(math.sqrt(0.5))


def test_constraint_values_examples():
    g1, g2 = constraint_values(0.5, ModelParams(1, 1, 0.1, 0.0))
    assert g1 == pytest.approx(1.0)
    assert g2 == pytest.approx(0.5 / math.sqrt(0.75) + 0.25 / 0.75)
    assert g2 == pytest.approx(0.91068, abs=1e-5)
    g1, g2 = constraint_values(0.5, ModelParams(1, 1, 0.1, 1.0))
    assert g1 == pytest.approx(3.5)
    assert g2 == pytest.approx(3 / math.sqrt(2) + 0.75)
    assert g2 == pytest.approx(2.87132, abs=1e-5)
    assert WaveNumbers.of(0.5, 1.0, 1.0).D == pytest.approx(2.0)


def test_constraint_values_domain_error():
    with pytest.raises(DomainError):
        constraint_values(1.5, ModelParams(1, 1, 0.1, 0.0))


def test_g2_blows_up_at_zero():
    _, g2 = constraint_values(1e-6, ModelParams(1, 1, 0.1, 0.5))
    assert g2 > 1e3


@pytest.mark.parametrize("tau", sorted(M_TAU_SCAN))
def test_m_tau_against_scan(tau):
    m = m_tau(1.0, tau)
    assert m <= M_TAU_SCAN[tau] + 1e-12
    assert m == pytest.approx(M_TAU_SCAN[tau], rel=1e-6)


def test_m_tau_tends_to_one():
    vals = [m_tau(1.0, t) for t in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2] > 1.0
    assert vals[-1] < 1.01


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.2, 4.0), tau=st.floats(0.01, 3.0))
def test_m_tau_at_least_one(a, tau):
    assert m_tau(a, tau, n_scan=2000) >= 1.0


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.2, 4.0), b=st.floats(0.2, 4.0), tau=st.floats(0.01, 3.0))
def test_chi_star_below_half_b(a, b, tau):
    cs = chi_star(ModelParams(a, b, 0.0, tau), n_scan=2000)
    assert 0 < cs < b / 2


def test_chi_star_limit_and_tau_zero():
    assert chi_star(ModelParams(1, 1, 0.1, 0.004)) == pytest.approx(0.5, rel=0.02)
    with pytest.raises(DomainError):
        chi_star(ModelParams(1, 1, 0.1, 0.0))


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.1, 5.0), tau=st.floats(0.0, 3.0), frac=st.floats(1e-3, 0.999))
def test_denominator_and_g2_positive(a, tau, frac):
    mu = frac * mu_max(a, tau)
    assert denominator(mu, a, tau) > 0
    _, g2 = constraint_values(mu, ModelParams(a, 1.0, 0.1, tau))
    assert g2 > 0


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.1, 5.0), mu=st.lists(st.floats(1e-3, 0.999), min_size=2, max_size=20,
                                          unique=True))
def test_wave_speed_decreasing_below_sqrt_a(a, mu):
    m = np.sort(np.array(mu)) * math.sqrt(a)
    assert np.all(np.diff(wave_speed(m, a)) < 0)


@settings(max_examples=15, deadline=None)
@given(tau=st.floats(0.05, 2.0), frac=st.floats(0.02, 0.95))
def test_window_ordering(tau, frac):
    p0 = ModelParams(1.0, 1.0, 0.0, tau)
    chi = frac * chi_star(p0, n_scan=2000)
    w = admissible_window(ModelParams(1.0, 1.0, chi, tau), n_scan=2000)
    assert 0 <= w.mu_star2 < w.mu_star <= w.mu_tau
    assert 2.0 - 1e-12 <= w.c_star < w.c_star2


def test_window_constraints_inside():
    p = ModelParams(1.0, 1.0, 0.1, 0.5)
    w = admissible_window(p)
    eps = 1e-6
    mus = np.linspace(w.mu_star2 + eps, w.mu_star - eps, 2001)
    g1, g2 = constraint_values(mus, p)
    assert np.all(g2 <= p.rhs)
    mus = np.linspace(w.mu_tilde_star2 + eps, w.mu_tau - eps, 2001)
    g1, _ = constraint_values(mus, p)
    assert np.all(g1 < p.rhs)


def test_window_reference_values():
    w = admissible_window(ModelParams(1.0, 1.0, 0.1, 0.5))
    assert w.c_star == pytest.approx(2.0)
    assert w.c_star2 == pytest.approx(16.0, rel=1e-9)
    assert w.chi_star == pytest.approx(0.3134009936368295, rel=1e-9)
    assert w.contains_speed(3.0) and not w.contains_speed(1.9)


def test_window_monotone_in_chi():
    chis = [0.1, 0.03, 0.01, 0.003, 0.001]
    ws = [admissible_window(ModelParams(1.0, 1.0, c, 0.5)) for c in chis]
    s = [w.mu_star for w in ws]
    s2 = [w.mu_star2 for w in ws]
    assert all(x <= y + 1e-12 for x, y in zip(s, s[1:]))
    assert all(x >= y - 1e-12 for x, y in zip(s2, s2[1:]))
    assert s2[-1] < 1e-3


def test_window_undefined():
    with pytest.raises(WindowUndefined):
        admissible_window(ModelParams(1.0, 1.0, 0.4, 0.5))
    with pytest.raises(WindowUndefined):
        admissible_window(ModelParams(1.0, 1.0, 0.0, 0.5))


def test_window_tau_zero_limit():
    chi = 0.1
    target = mu_star_limit(chi, 1.0, 1.0)
    w = admissible_window(ModelParams(1.0, 1.0, chi, 1e-4))
    assert w.mu_star == pytest.approx(target, rel=1e-2)
    assert w.mu_star2 < 1e-2


def test_mu_from_speed():
    p = ModelParams(1.0, 1.0, 0.1, 0.5)
    assert mu_from_speed(2.5, p) == pytest.approx(0.5)
    with pytest.raises(NoRoot):
        mu_from_speed(2.0, ModelParams(1.01, 1.0, 0.1, 0.5))
    with pytest.raises(NoRoot):
        mu_from_speed(2.0, p)
    assert mu_from_speed(2.0, p, allow_endpoint=True) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.1, 4.0), frac=st.floats(0.01, 0.99))
def test_mu_from_speed_round_trip(a, frac):
    p = ModelParams(a, 1.0, 0.0, 2.0)
    mu = frac * math.sqrt(a)
    assert mu_from_speed(wave_speed(mu, a), p) == pytest.approx(mu, rel=1e-9)


def test_is_admissible_matches_window():
    p = ModelParams(1.0, 1.0, 0.1, 0.5)
    w = admissible_window(p)
    assert is_admissible(p, 0.5 * (w.mu_star + w.mu_star2))
    assert not is_admissible(p, 0.5 * w.mu_star2)


def test_simple_chi_bound():
    p = ModelParams(1.0, 1.0, 0.1, 0.5)
    bound = simple_chi_bound(p)
    assert bound == pytest.approx(0.2, rel=1e-9)
    r = chi_bound_readings(p)
    assert r["corrected"] == bound
    assert r["literal_a_1_plus_2"] == pytest.approx(1 / 6, rel=1e-9)
    assert bound <= chi_star(p)
    w = admissible_window(ModelParams(1.0, 1.0, 0.9 * bound, 0.5))
    assert w.mu_star == pytest.approx(1.0) and w.c_star == pytest.approx(2.0)
    with pytest.raises(NotApplicable):
        simple_chi_bound(ModelParams(2.0, 1.0, 0.1, 0.1))


def test_simple_chi_bound_below_threshold():
    rng = np.random.default_rng(3)
    checked = 0
    for a, b, tau in zip(rng.uniform(0.2, 3, 100), rng.uniform(0.2, 3, 100),
                         rng.uniform(0.05, 0.95, 100)):
        p = ModelParams(a, b, 0.0, tau)
        try:
            bound = simple_chi_bound(p)
        except NotApplicable:
            continue
        checked += 1
        assert bound <= chi_star(p, n_scan=2000) * (1 + 1e-9)
    assert checked > 20


def test_regime_predicates():
    p = ModelParams(1.0, 1.0, 0.1, 0.5)
    assert p.bounded_regime(1.0) and p.stable_regime(1.0)
    assert p.uniform_bound(1.0, 3.0) == 3.0
    assert p.uniform_bound(1.0, 0.5) == pytest.approx(1 / (0.9 - 0.025))
    with pytest.raises(NotApplicable):
        ModelParams(1.0, 1.0, 0.6, 0.5).uniform_bound(10.0, 1.0)
