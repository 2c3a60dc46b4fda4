"""
FX quote conventions: forwards, the four delta definitions, ATM strikes and
strike-from-delta inversion. Day count is ACT/365 and rates are flat continuous.
"""

import math

from loguru import logger
from scipy.optimize import brentq
from scipy.stats import norm

from vvfx.models import (
    AtmStyle,
    Conventions,
    DeltaStyle,
    DomainError,
    MarketSnapshot,
    NumericalError,
    OptionSide,
    PremiumStyle,
)

# Bracket half-width for strike searches, in units of sigma * sqrt(tau)
_BRACKET_STDEVS = 8.0


def discount_factor(rate: float, tau: float) -> float:
    if tau < 0:
        raise DomainError(f"tau must be non-negative, got {tau}")
    return math.exp(-rate * tau)


def forward_price(snapshot: MarketSnapshot, tau: float) -> float:
    """F = S * DF_f / DF_d."""
    if tau < 0:
        raise DomainError(f"tau must be non-negative, got {tau}")
    return snapshot.spot * math.exp((snapshot.r_d - snapshot.r_f) * tau)


def d1_d2(forward: float, strike: float, sigma: float, tau: float) -> tuple[float, float]:
    stdev = sigma * math.sqrt(tau)
    d1 = (math.log(forward / strike) + 0.5 * stdev * stdev) / stdev
    return d1, d1 - stdev


def _omega(side: OptionSide) -> float:
    return 1.0 if side == OptionSide.CALL else -1.0


# ──────────────────────────────────────────────
# Delta
# ──────────────────────────────────────────────


def delta(
    side: OptionSide,
    spot: float,
    strike: float,
    sigma: float,
    tau: float,
    r_d: float,
    r_f: float,
    conv: Conventions,
) -> float:
    """Delta in units of Ccy1 under the given delta and premium conventions."""
    if sigma <= 0 or tau <= 0:
        raise DomainError(f"delta needs sigma > 0 and tau > 0, got sigma={sigma}, tau={tau}")
    if strike <= 0 or spot <= 0:
        raise DomainError("spot and strike must be positive")

    omega = _omega(side)
    forward = spot * math.exp((r_d - r_f) * tau)
    d1, d2 = d1_d2(forward, strike, sigma, tau)

    if conv.premium_style == PremiumStyle.EXCLUDED:
        raw = omega * norm.cdf(omega * d1)
        if conv.delta_style == DeltaStyle.SPOT:
            return math.exp(-r_f * tau) * raw
        return raw

    # premium included: the premium, paid in Ccy1, offsets part of the hedge
    raw = omega * (strike / forward) * norm.cdf(omega * d2)
    if conv.delta_style == DeltaStyle.SPOT:
        return math.exp(-r_f * tau) * raw
    return raw


# ──────────────────────────────────────────────
# ATM
# ──────────────────────────────────────────────


def atm_strike(forward: float, sigma_atm: float, tau: float, conv: Conventions) -> float:
    """Strike of the delta-neutral straddle (or the forward for the forward convention)."""
    if sigma_atm < 0 or tau < 0:
        raise DomainError("atm_strike needs sigma_atm >= 0 and tau >= 0")
    variance = sigma_atm * sigma_atm * tau
    if conv.atm_style == AtmStyle.DN_EXCLUDED:
        return forward * math.exp(0.5 * variance)
    if conv.atm_style == AtmStyle.DN_INCLUDED:
        return forward * math.exp(-0.5 * variance)
    return forward


# ──────────────────────────────────────────────
# Strike from delta
# ──────────────────────────────────────────────


def strike_from_delta(
    target_delta: float,
    side: OptionSide,
    sigma: float,
    snapshot: MarketSnapshot,
    tau: float,
    conv: Conventions,
) -> float:
    """Invert delta for the strike. Premium-included calls return the OTM root."""
    if sigma <= 0 or tau <= 0:
        raise DomainError(f"strike_from_delta needs sigma > 0 and tau > 0, got {sigma}, {tau}")
    omega = _omega(side)
    if omega * target_delta <= 0:
        raise DomainError(f"{side} delta must have sign {omega:+.0f}, got {target_delta}")

    df_f = math.exp(-snapshot.r_f * tau)
    scale = df_f if conv.delta_style == DeltaStyle.SPOT else 1.0
    magnitude = abs(target_delta) / scale
    if magnitude >= 1.0:
        raise NoSolutionError(
            f"|delta| {abs(target_delta)} is unreachable, bound is {scale:.10f}"
        )

    forward = forward_price(snapshot, tau)
    stdev = sigma * math.sqrt(tau)

    if conv.premium_style == PremiumStyle.EXCLUDED:
        d1 = omega * norm.ppf(magnitude)
        return forward * math.exp(-stdev * d1 + 0.5 * stdev * stdev)

    def excess(log_moneyness: float) -> float:
        d2 = (-log_moneyness - 0.5 * stdev * stdev) / stdev
        return math.exp(log_moneyness) * norm.cdf(omega * d2) - magnitude

    lo, hi = -_BRACKET_STDEVS * stdev, _BRACKET_STDEVS * stdev
    if side == OptionSide.CALL:
        lo = _peak_log_moneyness(stdev)
        if excess(lo) < 0:
            raise NoSolutionError(
                f"premium-included call delta {target_delta} exceeds the attainable maximum "
                f"{scale * (excess(lo) + magnitude):.6f}"
            )
    if excess(lo) * excess(hi) > 0:
        raise NoSolutionError(
            f"delta {target_delta} not bracketed on log-moneyness [{lo:.4f}, {hi:.4f}]"
        )

    root = brentq(excess, lo, hi, xtol=1e-15, maxiter=200)
    logger.debug("strike_from_delta {} {} -> log-moneyness {:.10f}", side, target_delta, root)
    return forward * math.exp(root)


def _peak_log_moneyness(stdev: float) -> float:
    """Log-moneyness where the premium-included call delta peaks: N(d2) = n(d2) / stdev."""

    def slope(d2: float) -> float:
        return norm.cdf(d2) - norm.pdf(d2) / stdev

    d2_peak = brentq(slope, -stdev - 1.0, _BRACKET_STDEVS, xtol=1e-14)
    return -stdev * d2_peak - 0.5 * stdev * stdev


# ──────────────────────────────────────────────
# Custom Exceptions
# ──────────────────────────────────────────────


class NoSolutionError(NumericalError):
    pass
