"""Unit tests for the hedge portfolio, pillar weights, attenuation and VV prices."""

import math

import numpy as np
import pytest

from vvfx.bs import greeks, vanilla_price
from vvfx.models import (
    DomainError,
    InterpolationRule,
    OptionKind,
    OptionSide,
    OptionSpec,
    PricingFlag,
    VVParams,
)
from vvfx.smile import build_smile, vol_at_strike
from vvfx.vanna_volga import (
    attenuation,
    build_hedge_set,
    closed_form_weights,
    market_greek_prices,
    simple_vv_price,
    vv_price,
    weights_atm_rr_bf,
)

PILLARS = (0.9, 1.0, 1.12)


# ── weights ──


def test_weights_match_greek_system(flat):
    sigma, tau = 0.1, 1.0

    def vector(k: float) -> np.ndarray:
        return np.array(greeks(OptionSide.CALL, 1.0, k, sigma, tau, flat.r_d, flat.r_f).vector)

    legs = np.column_stack([vector(k) for k in PILLARS])
    rng = np.random.default_rng(23)
    for k in rng.uniform(0.8, 1.3, 100):
        k = float(k)
        exact = np.linalg.solve(legs, vector(k))
        closed = closed_form_weights(k, PILLARS, sigma, tau, flat)
        np.testing.assert_allclose(closed, exact, atol=1e-10)


def test_weights_are_kronecker_at_pillars(flat):
    for i, k in enumerate(PILLARS):
        weights = closed_form_weights(k, PILLARS, 0.1, 1.0, flat)
        expected = [1.0 if j == i else 0.0 for j in range(3)]
        assert weights == pytest.approx(expected, abs=1e-14)


def test_weights_need_ordered_pillars(flat):
    with pytest.raises(DomainError, match="increasing"):
        closed_form_weights(1.0, (1.0, 0.9, 1.12), 0.1, 1.0, flat)


def test_weights_atm_rr_bf():
    assert weights_atm_rr_bf(0.2, 0.5, 0.4) == pytest.approx((1.1, 0.1, 0.6))


# ── hedge portfolio ──


def test_flat_smile_prices_no_greeks(flat):
    curve = build_smile(flat.quotes[0], flat)
    hedges = build_hedge_set(curve)
    assert hedges.rr_cost == 0.0
    assert hedges.bf_cost == 0.0
    assert market_greek_prices(hedges) == (0.0, 0.0, 0.0)

    spec = OptionSpec(kind=OptionKind.UP_OUT_CALL, tau=1.0, strike=1.0, upper_barrier=1.2)
    result = vv_price(spec, curve, VVParams(), gamma=0.4)
    assert result.vv_price == pytest.approx(result.bstv, abs=1e-15)


def test_market_greek_prices_solve_leg_costs(usdchf):
    hedges = build_hedge_set(build_smile(usdchf.quotes[0], usdchf))
    omega = np.array(market_greek_prices(hedges))
    assert np.dot(hedges.atm.vector, omega) == pytest.approx(0.0, abs=1e-12)
    assert np.dot(hedges.rr.vector, omega) == pytest.approx(hedges.rr_cost, abs=1e-12)
    assert np.dot(hedges.bf.vector, omega) == pytest.approx(hedges.bf_cost, abs=1e-12)


def test_usdchf_leg_costs_have_market_signs(usdchf):
    hedges = build_hedge_set(build_smile(usdchf.quotes[0], usdchf))
    assert hedges.rr_cost < 0.0
    assert hedges.bf_cost > 0.0


# ── attenuation ──


def test_attenuation_limits():
    params = VVParams(a=0.6, b=0.1, c=0.3, gamma_star=0.9)
    assert attenuation(params, 0.0) == pytest.approx((0.0, 0.1))
    assert attenuation(params, 1.0) == pytest.approx((1.0, 1.0))
    assert attenuation(params, 0.5) == pytest.approx((0.3, 0.25))


def test_attenuation_continuous_at_gamma_star():
    params = VVParams(a=0.6, b=0.1, c=0.3, gamma_star=0.9)
    below = attenuation(params, 0.9)
    above = attenuation(params, 0.9 + 1e-12)
    assert above == pytest.approx(below, abs=1e-9)


def test_treasury_attenuation_stays_linear():
    params = VVParams(a=0.6, b=0.1, c=0.3)
    assert attenuation(params, 1.0, treasury=True) == pytest.approx((0.6, 0.4))


def test_attenuation_rejects_gamma_outside_unit_interval():
    with pytest.raises(DomainError):
        attenuation(VVParams(), 1.2)


# ── prices ──


def test_vanilla_reprices_on_the_smile(usdchf):
    curve = build_smile(usdchf.quotes[0], usdchf)
    hedges = build_hedge_set(curve)
    for side, kind in (
        (OptionSide.CALL, OptionKind.VANILLA_CALL),
        (OptionSide.PUT, OptionKind.VANILLA_PUT),
    ):
        for k in (0.9, 1.05, 1.1, 1.25):
            spec = OptionSpec(kind=kind, tau=1.0, strike=k)
            result = vv_price(spec, curve, VVParams(), gamma=1.0, hedges=hedges, include_vega=True)
            smile = vanilla_price(
                side, usdchf.spot, k, vol_at_strike(curve, k), 1.0, usdchf.r_d, usdchf.r_f
            )
            assert result.vv_price == pytest.approx(smile, abs=1e-8)


def test_vanilla_close_to_quadratic_smile_near_atm(usdchf):
    quote = usdchf.quotes[0].model_copy(update={"tau": 0.25})
    curve = build_smile(quote, usdchf, rule=InterpolationRule.QUADRATIC)
    hedges = build_hedge_set(curve)
    for y in (-0.08, -0.03, 0.0, 0.03, 0.08):
        k = curve.k_atm * math.exp(y)
        spec = OptionSpec(kind=OptionKind.VANILLA_CALL, tau=0.25, strike=k)
        result = vv_price(spec, curve, VVParams(), gamma=1.0, hedges=hedges, include_vega=True)
        smile = vanilla_price(
            OptionSide.CALL, usdchf.spot, k, vol_at_strike(curve, k), 0.25, usdchf.r_d, usdchf.r_f
        )
        assert result.vv_price == pytest.approx(smile, abs=5e-4 * usdchf.spot)


def test_simple_recipe_is_a_first_order_expansion(usdchf):
    """
    On a quadratic smile the simple recipe prices a vanilla like BS at its smile vol,
    up to a vega * sigma_ATM^2 * tau * (b + c*Y) residual.
    """
    tau = 0.25
    quote = usdchf.quotes[0].model_copy(update={"tau": tau})
    curve = build_smile(quote, usdchf, rule=InterpolationRule.QUADRATIC)
    hedges = build_hedge_set(curve)
    sigma = curve.sigma_atm
    spot, r_d, r_f = usdchf.spot, usdchf.r_d, usdchf.r_f

    for k in np.linspace(curve.k_put, curve.k_call, 21):
        k = float(k)
        spec = OptionSpec(kind=OptionKind.VANILLA_CALL, tau=tau, strike=k)
        simple = simple_vv_price(spec, curve, hedges)
        smile = vanilla_price(OptionSide.CALL, spot, k, vol_at_strike(curve, k), tau, r_d, r_f)
        y = math.log(k / curve.k_atm)
        vega = greeks(OptionSide.CALL, spot, k, sigma, tau, r_d, r_f).vega
        residual = vega * sigma * sigma * tau * (curve.quad_b + curve.quad_c * y)

        assert simple == pytest.approx(smile, abs=5e-4 * spot)
        assert simple == pytest.approx(smile + residual, abs=1e-3 * spot)


def test_far_knock_out_prices_like_its_vanilla(usdchf):
    curve = build_smile(usdchf.quotes[0], usdchf)
    hedges = build_hedge_set(curve)
    strike = 1.1
    ko = OptionSpec(
        kind=OptionKind.UP_OUT_CALL, tau=1.0, strike=strike, upper_barrier=5.0 * usdchf.spot
    )
    vanilla = OptionSpec(kind=OptionKind.VANILLA_CALL, tau=1.0, strike=strike)
    ko_price = vv_price(ko, curve, VVParams(), gamma=1.0, hedges=hedges).vv_price
    vanilla_price_ = vv_price(vanilla, curve, VVParams(), gamma=1.0, hedges=hedges).vv_price
    assert ko_price == pytest.approx(vanilla_price_, abs=1e-4 * usdchf.spot)


def test_knocked_constituent_short_circuits(usdchf):
    curve = build_smile(usdchf.quotes[0], usdchf)
    spec = OptionSpec(kind=OptionKind.UP_OUT_CALL, tau=1.0, strike=1.0, upper_barrier=1.0902)
    result = vv_price(spec, curve, VVParams(), gamma=0.0)
    assert result.final_price == 0.0
    assert PricingFlag.KNOCKED in result.flags


def test_simple_vv_leaves_delta_neutral_straddle_strike_alone(usdchf):
    curve = build_smile(usdchf.quotes[0], usdchf)
    hedges = build_hedge_set(curve)
    spec = OptionSpec(kind=OptionKind.VANILLA_CALL, tau=1.0, strike=curve.k_atm)
    simple = simple_vv_price(spec, curve, hedges)
    assert simple == pytest.approx(
        vanilla_price(
            OptionSide.CALL, usdchf.spot, curve.k_atm, curve.sigma_atm, 1.0, usdchf.r_d, usdchf.r_f
        ),
        abs=1e-10,
    )
