import math

import numpy as np
import pytest

from crystalbec import residue_integrals as ri


@pytest.mark.parametrize("beta", [0.5, 2.0])
def test_closed_forms_match_simplex_oracle(beta):
    ctx = ri.IntegralContext.from_beta(beta, 0.2)
    cf = ri.closed_forms(ctx)
    for name, shifts in ri.SHIFT_SETS.items():
        assert cf[name] == pytest.approx(ri.simplex_oracle(shifts, ctx), rel=1e-10), name


def test_closed_forms_match_quadrature_oracle_rank_one():
    ctx = ri.IntegralContext.from_beta(1.0, 0.3)
    cf = ri.closed_forms(ctx)
    for name in ("I1(a)", "I2(0,a)", "I2(a,2a)", "I3(0,a,a)", "I3(0,a,-a)"):
        assert cf[name] == pytest.approx(ri.In_oracle(ri.SHIFT_SETS[name], ctx), rel=1e-9), name


def test_quadrature_oracle_rank_two():
    ctx = ri.IntegralContext.from_beta(1.0)
    name = "I3(a1,a2,a1+a2)"
    assert ri.closed_forms(ctx)[name] == pytest.approx(ri.In_oracle(ri.SHIFT_SETS[name], ctx), rel=1e-8)


def test_order_zero_oracle_is_gaussian_normalization():
    tau = 0.7
    assert ri.In_oracle([], ri.IntegralContext(tau)) == pytest.approx((tau / (2 * math.pi)) ** 1.5, rel=1e-12)


def test_large_tau_limit():
    ctx = ri.IntegralContext.from_beta(1e-3)
    cf = ri.closed_forms(ctx)
    for name, v in cf.items():
        assert v == pytest.approx(ri.limit_large_tau(ri.ORDER[name], ctx), rel=1e-6)


def test_series_branch_is_continuous():
    b = ri.BETA_SERIES
    for name in ("b6", "b7", "b8", "b9"):
        below = ri._bracket(name, b * (1 - 1e-12))
        direct = ri._bracket(name, b * (1 + 1e-12))
        assert below == pytest.approx(direct, rel=1e-9, abs=1e-15)


def test_asymptotic_dawson_variant_at_large_beta():
    ctx = ri.IntegralContext.from_beta(20.0)
    a = ri.closed_forms_asymptotic(ctx)
    c = ri.closed_forms(ctx)
    for name in c:
        assert a[name] == pytest.approx(c[name], rel=1e-5)


def test_prefactor_attaches():
    ctx = ri.IntegralContext(0.4, 0.3)
    assert ri.I1(ctx) == pytest.approx(ri.I1(ctx, reduced=True) * math.exp(-0.3 / 0.4))


def test_I1_negative():
    for tau in (0.01, 0.3, 5.0):
        assert ri.I1(ri.IntegralContext(tau)) < 0


def test_residue_sum_simple_and_confluent():
    tau = 0.5
    a, b = 0.2, 1.3
    want = (math.exp(-a / tau) - math.exp(-b / tau)) / (a - b)
    assert ri.contour_residue_sum([a, b], tau) == pytest.approx(want, rel=1e-14)
    # double pole: derivative of exp(-z/tau)
    assert ri.contour_residue_sum([a, a], tau) == pytest.approx(-math.exp(-a / tau) / tau, rel=1e-14)
    # triple pole: second derivative / 2
    assert ri.contour_residue_sum([a, a, a], tau) == pytest.approx(math.exp(-a / tau) / (2 * tau**2), rel=1e-14)


def test_residue_sum_near_coincident_is_continuous():
    tau = 0.5
    exact = ri.contour_residue_sum([0.3, 0.3, 1.0], tau)
    for eps in (1e-4, 1e-7, 1e-10):
        assert ri.contour_residue_sum([0.3, 0.3 + eps, 1.0], tau) == pytest.approx(exact, rel=10 * eps + 1e-12)


def test_oracle_rejects_three_dimensional_span():
    with pytest.raises(ValueError):
        ri.In_oracle([(1, 0, 0), (0, 1, 0), (0, 0, 1)], ri.IntegralContext(1.0))
