import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crystalbec import landau
from crystalbec.landau import LandauParams, Scenario


def test_classify_examples():
    c = landau.classify(LandauParams(0.3, -1.0, 0.5, 1.0))
    assert c.scenario is Scenario.ONE_TRANSITION_SUPERFLUID and c.p0_sq == pytest.approx(1.0)
    c = landau.classify(LandauParams(0.3, 1.0, 0.5, 1.0))
    assert c.scenario is Scenario.TWO_TRANSITIONS and c.p0_sq == 0.0 and c.threshold_alpha0 == 0.0
    c = landau.classify(LandauParams(0.5, -1.0, 0.5, 1.0))
    assert c.alpha_tilde == pytest.approx(0.0)
    assert landau.classify(LandauParams(0.3, 0.0, 0.5, 1.0)).scenario is Scenario.DEGENERATE


def test_invariant_violations():
    with pytest.raises(ValueError):
        LandauParams(0.0, 0.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        LandauParams(0.0, 0.0, -0.5, 1.0)


def test_minimum_formulas():
    m = landau.minimize_over_eta_p0(LandauParams(0.4, 1.0, 0.5, 2.0))
    assert (m.eta_sq, m.p0_sq, m.dF) == (0.0, 0.0, 0.0)
    p = LandauParams(-0.2, -1.0, 0.5, 2.0)
    m = landau.minimize_over_eta_p0(p)
    at = p.alpha0 - p.alpha1**2 / (4 * p.alpha2)
    assert m.dF == pytest.approx(-at * at / (4 * p.beta_q))
    assert m.superfluid


def test_linear_alpha0():
    p = LandauParams.linear(2.0, 1.5, 1.0, 1.0, 0.5, 1.0)
    assert p.alpha0 == pytest.approx(1.0)


def test_brute_force_agreement_small_batch():
    rng = np.random.default_rng(3)
    for _ in range(40):
        p = LandauParams(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2))
        a, b = landau.minimize_over_eta_p0(p), landau.brute_force_minimum(p)
        assert a.scenario == b.scenario
        assert a.dF == pytest.approx(b.dF, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 2), st.floats(0.1, 2), st.floats(0.01, 100))
def test_scaling_invariance(a0, a1, a2, b, lam):
    p = LandauParams(a0, a1, a2, b)
    m1 = landau.minimize_over_eta_p0(p)
    m2 = landau.minimize_over_eta_p0(p.scaled(lam))
    assert m2.eta_sq == pytest.approx(m1.eta_sq, rel=1e-12, abs=1e-15)
    assert m2.p0_sq == pytest.approx(m1.p0_sq, rel=1e-12, abs=1e-15)
    assert m2.dF == pytest.approx(lam * m1.dF, rel=1e-12, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 2), st.floats(0.1, 2))
def test_no_condensate_means_no_drift(a0, a1, a2, b):
    m = landau.minimize_over_eta_p0(LandauParams(a0, a1, a2, b))
    if m.eta_sq == 0.0:
        assert m.p0_sq == 0.0 and not m.superfluid


def test_general_alpha_callable_matches_quartic():
    p = LandauParams(-0.1, -1.0, 0.5, 1.0)
    g = landau.minimize_general(lambda x: float(p.alpha(x)), p.beta_q, p_max=3.0)
    m = landau.minimize_over_eta_p0(p)
    assert g.p0_star**2 == pytest.approx(m.p0_sq, rel=1e-6)
    assert g.dF == pytest.approx(m.dF, rel=1e-10)


def test_general_alpha_with_nonzero_minimum():
    # minimum of alpha at p0 = 1.5 without a polynomial form
    g = landau.minimize_general(lambda x: -0.5 + 0.2 * (x - 1.5) ** 2 + 0.01 * (x - 1.5) ** 4, 1.0, 4.0)
    assert g.p0_star == pytest.approx(1.5, abs=1e-6)
    assert g.eta_sq == pytest.approx(0.25)
