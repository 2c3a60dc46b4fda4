"""
Vanna-Volga correction: the ATM / RR / BF hedge portfolio, market prices of the
vega, vanna and volga risks, interpolation weights, and the attenuated exotic price.
"""

import math

import numpy as np
from loguru import logger

from vvfx.bs import bs_price, greeks, vanilla_price
from vvfx.config import settings
from vvfx.conventions import strike_from_delta
from vvfx.models import (
    DomainError,
    GreeksTriple,
    HedgeSet,
    MarketSnapshot,
    NumericalError,
    OptionKind,
    OptionSide,
    OptionSpec,
    PricingFlag,
    PricingResult,
    SmileCurve,
    VVParams,
)
from vvfx.smile import vol_at_strike

# ──────────────────────────────────────────────
# Hedge portfolio
# ──────────────────────────────────────────────


def _combine(*terms: tuple[float, GreeksTriple]) -> GreeksTriple:
    vega = vanna = volga = 0.0
    for weight, g in terms:
        vega += weight * g.vega
        vanna += weight * g.vanna
        volga += weight * g.volga
    return GreeksTriple(vega=vega, vanna=vanna, volga=volga)


def build_hedge_set(curve: SmileCurve) -> HedgeSet:
    """25-delta strikes at sigma_ATM, leg Greeks at sigma_ATM, and the smile cost of each leg."""
    snap = curve.snapshot
    tau = curve.tau
    sigma = curve.sigma_atm
    k_call = strike_from_delta(0.25, OptionSide.CALL, sigma, snap, tau, curve.conventions)
    k_put = strike_from_delta(-0.25, OptionSide.PUT, sigma, snap, tau, curve.conventions)
    k_atm = curve.k_atm

    def g(k: float) -> GreeksTriple:
        return greeks(OptionSide.CALL, snap.spot, k, sigma, tau, snap.r_d, snap.r_f)

    def cost(side: OptionSide, k: float) -> float:
        smile = vanilla_price(side, snap.spot, k, vol_at_strike(curve, k), tau, snap.r_d, snap.r_f)
        return smile - vanilla_price(side, snap.spot, k, sigma, tau, snap.r_d, snap.r_f)

    call_cost = cost(OptionSide.CALL, k_call)
    put_cost = cost(OptionSide.PUT, k_put)
    straddle_cost = cost(OptionSide.CALL, k_atm) + cost(OptionSide.PUT, k_atm)

    g_call, g_put, g_atm = g(k_call), g(k_put), g(k_atm)
    return HedgeSet(
        sigma_atm=sigma,
        k_atm=k_atm,
        k_call=k_call,
        k_put=k_put,
        atm=g_atm,
        rr=_combine((1.0, g_call), (-1.0, g_put)),
        bf=_combine((0.5, g_call), (0.5, g_put), (-1.0, g_atm)),
        rr_cost=call_cost - put_cost,
        bf_cost=0.5 * (call_cost + put_cost) - 0.5 * straddle_cost,
    )


def market_greek_prices(hedges: HedgeSet) -> tuple[float, float, float]:
    """(Omega_vega, Omega_vanna, Omega_volga) priced off the three legs' smile costs."""
    legs = np.array([hedges.atm.vector, hedges.rr.vector, hedges.bf.vector])
    cond = np.linalg.cond(legs)
    if not np.isfinite(cond) or cond > settings.hedge_cond_max:
        raise SingularHedgeError(f"hedge Greek matrix is near-singular (condition {cond:.3e})")
    omega = np.linalg.solve(legs, np.array([0.0, hedges.rr_cost, hedges.bf_cost]))
    return float(omega[0]), float(omega[1]), float(omega[2])


# ──────────────────────────────────────────────
# Interpolation weights
# ──────────────────────────────────────────────


def closed_form_weights(
    strike: float,
    pillars: tuple[float, float, float],
    sigma_atm: float,
    tau: float,
    snapshot: MarketSnapshot,
) -> tuple[float, float, float]:
    """Pillar weights matching the strike's vega, vanna and volga at sigma_ATM."""
    k1, k2, k3 = pillars
    if min(pillars) <= 0 or strike <= 0:
        raise DomainError("strikes must be positive")
    if not k1 < k2 < k3:
        raise DomainError(f"pillars must be strictly increasing, got {pillars}")

    def vega(k: float) -> float:
        return greeks(
            OptionSide.CALL, snapshot.spot, k, sigma_atm, tau, snapshot.r_d, snapshot.r_f
        ).vega

    ln = math.log
    v = vega(strike)
    w1 = v / vega(k1) * ln(k2 / strike) * ln(k3 / strike) / (ln(k2 / k1) * ln(k3 / k1))
    w2 = v / vega(k2) * ln(strike / k1) * ln(k3 / strike) / (ln(k2 / k1) * ln(k3 / k2))
    w3 = v / vega(k3) * ln(strike / k1) * ln(strike / k2) / (ln(k3 / k1) * ln(k3 / k2))
    return w1, w2, w3


def weights_atm_rr_bf(w1: float, w2: float, w3: float) -> tuple[float, float, float]:
    return w1 + w2 + w3, 0.5 * (w3 - w1), w1 + w3


# ──────────────────────────────────────────────
# Instrument Greeks
# ──────────────────────────────────────────────


def instrument_greeks(spec: OptionSpec, sigma: float, snapshot: MarketSnapshot) -> GreeksTriple:
    """Analytic for vanillas, central differences of the flat-vol price otherwise."""
    if spec.kind in (OptionKind.VANILLA_CALL, OptionKind.VANILLA_PUT):
        assert spec.strike is not None and spec.side is not None
        return greeks(
            spec.side, snapshot.spot, spec.strike, sigma, spec.tau, snapshot.r_d, snapshot.r_f
        )

    h = settings.vol_bump
    k = settings.spot_bump * snapshot.spot

    def price(vol: float, spot_shift: float = 0.0) -> float:
        snap = snapshot
        if spot_shift:
            snap = snapshot.model_copy(update={"spot": snapshot.spot + spot_shift})
        return bs_price(spec, vol, snap)[0]

    up, mid, down = price(sigma + h), price(sigma), price(sigma - h)
    cross = (
        price(sigma + h, k) - price(sigma - h, k) - price(sigma + h, -k) + price(sigma - h, -k)
    )
    return GreeksTriple(
        vega=(up - down) / (2.0 * h),
        vanna=cross / (4.0 * h * k),
        volga=(up - 2.0 * mid + down) / (h * h),
    )


# ──────────────────────────────────────────────
# Prices
# ──────────────────────────────────────────────


def simple_vv_price(spec: OptionSpec, curve: SmileCurve, hedges: HedgeSet) -> float:
    """Flat price plus the RR cost scaled by vanna and the BF cost scaled by volga."""
    if abs(hedges.rr.vanna) < 1e-14 or abs(hedges.bf.volga) < 1e-14:
        raise SingularHedgeError("RR vanna or BF volga vanishes")
    bstv, _ = bs_price(spec, curve.sigma_atm, curve.snapshot)
    x = instrument_greeks(spec, curve.sigma_atm, curve.snapshot)
    return (
        bstv
        + x.vanna / hedges.rr.vanna * hedges.rr_cost
        + x.volga / hedges.bf.volga * hedges.bf_cost
    )


def attenuation_basis(
    gamma: float, gamma_star: float, treasury: bool
) -> tuple[tuple[float, float], tuple[float, float, float]]:
    """
    Attenuation factors as affine functions of the coefficients:
    p_vanna = u + a * s_a and p_volga = u + b * s_b + c * s_c.

    Returns ((u, s_a), (u, s_b, s_c)). Below gamma_star, and always for treasury
    instruments, p_vanna = a * gamma and p_volga = b + c * gamma. Above it both blend
    linearly from their value at gamma_star to 1 at gamma = 1.
    """
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    if treasury or gamma <= gamma_star:
        return (0.0, gamma), (0.0, 1.0, gamma)
    lower = (1.0 - gamma) / (1.0 - gamma_star)
    upper = (gamma - gamma_star) / (1.0 - gamma_star)
    return (upper, gamma_star * lower), (upper, lower, gamma_star * lower)


def attenuation(params: VVParams, gamma: float, treasury: bool = False) -> tuple[float, float]:
    """(p_vanna, p_volga)."""
    (u_a, s_a), (u_v, s_b, s_c) = attenuation_basis(gamma, params.gamma_star, treasury)
    return u_a + params.a * s_a, u_v + params.b * s_b + params.c * s_c


def vv_price(
    spec: OptionSpec,
    curve: SmileCurve,
    params: VVParams,
    gamma: float,
    hedges: HedgeSet | None = None,
    include_vega: bool = False,
) -> PricingResult:
    """
    Attenuated Vanna-Volga price of one knock-out, no-touch, vanilla or cash constituent.

    No arbitrage clamps are applied here. With include_vega the Omega_vega term is added
    unattenuated, which makes vanillas reprice exactly on the smile at gamma = 1.
    """
    p_vanna, p_volga = attenuation(params, gamma, spec.is_treasury)
    bstv, flags = bs_price(spec, curve.sigma_atm, curve.snapshot)
    if PricingFlag.KNOCKED in flags:
        return PricingResult(
            kind=spec.kind,
            bstv=bstv,
            p_vanna=p_vanna,
            p_volga=p_volga,
            gamma=gamma,
            vv_price=bstv,
            final_price=bstv,
            notional=spec.notional,
            flags=flags,
        )

    hedges = hedges or build_hedge_set(curve)
    omega_vega, omega_vanna, omega_volga = market_greek_prices(hedges)
    x = instrument_greeks(spec, curve.sigma_atm, curve.snapshot)
    vega_term = x.vega * omega_vega
    vanna_term = x.vanna * omega_vanna
    volga_term = x.volga * omega_volga

    price = bstv + p_vanna * vanna_term + p_volga * volga_term
    if include_vega:
        price += vega_term
    logger.debug(
        "{} bstv={:.8f} vanna={:.3e} volga={:.3e} gamma={:.4f} -> {:.8f}",
        spec.kind,
        bstv,
        vanna_term,
        volga_term,
        gamma,
        price,
    )
    return PricingResult(
        kind=spec.kind,
        bstv=bstv,
        vega_term=vega_term,
        vanna_term=vanna_term,
        volga_term=volga_term,
        p_vanna=p_vanna,
        p_volga=p_volga,
        gamma=gamma,
        vv_price=price,
        final_price=price,
        notional=spec.notional,
        flags=flags,
    )


# ──────────────────────────────────────────────
# Custom Exceptions
# ──────────────────────────────────────────────


class SingularHedgeError(NumericalError):
    pass
