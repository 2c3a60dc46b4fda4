"""
Three-pillar smile construction from ATM / 25-delta RR / 25-delta BF quotes,
strike interpolation, and the conversions between 1vol and 2vol butterflies.
"""

import math

import numpy as np
from loguru import logger
from scipy.optimize import brentq
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from vvfx.bs import InversionError, greeks, implied_vol, vanilla_price
from vvfx.config import settings
from vvfx.conventions import atm_strike, forward_price, strike_from_delta
from vvfx.models import (
    AtmStyle,
    BfKind,
    BrokerStrangle,
    ConventionAuditEntry,
    Conventions,
    DeltaStyle,
    DomainError,
    InterpolationRule,
    MarketSnapshot,
    NumericalError,
    OptionSide,
    PremiumStyle,
    SmileCurve,
    SmileReport,
    TenorQuote,
)

# ──────────────────────────────────────────────
# Construction
# ──────────────────────────────────────────────


def pillar_vols(quote: TenorQuote) -> tuple[float, float]:
    """(sigma_25P, sigma_25C) from a 2vol quote."""
    put = quote.sigma_atm + quote.sigma_bf25 - 0.5 * quote.sigma_rr25
    call = quote.sigma_atm + quote.sigma_bf25 + 0.5 * quote.sigma_rr25
    return put, call


def build_smile(
    quote: TenorQuote,
    snapshot: MarketSnapshot,
    conv: Conventions | None = None,
    rule: InterpolationRule = InterpolationRule.VANNA_VOLGA,
) -> SmileCurve:
    """
    Solve the 25-delta pillar strikes at their own smile vols.

    Iterates K <- strike_from_delta(+-0.25, sigma(K)) from sigma = sigma_ATM, halving the
    step once the strike starts to oscillate.
    """
    if quote.bf_kind != BfKind.TWO_VOL:
        raise DomainError("build_smile needs a 2vol butterfly; convert with bf2vol_from_bf1vol")
    conv = conv or snapshot.conventions
    tau = quote.tau
    sigma_put, sigma_call = pillar_vols(quote)
    k_atm = atm_strike(forward_price(snapshot, tau), quote.sigma_atm, tau, conv)

    def curve(k_put: float, k_call: float) -> SmileCurve:
        return SmileCurve(
            snapshot=snapshot,
            conventions=conv,
            tau=tau,
            k_put=k_put,
            k_atm=k_atm,
            k_call=k_call,
            sigma_put=sigma_put,
            sigma_atm=quote.sigma_atm,
            sigma_call=sigma_call,
        )

    k_put = strike_from_delta(-0.25, OptionSide.PUT, quote.sigma_atm, snapshot, tau, conv)
    k_call = strike_from_delta(0.25, OptionSide.CALL, quote.sigma_atm, snapshot, tau, conv)
    steps = (0.0, 0.0)
    damping = 1.0

    for iteration in range(1, settings.smile_max_iter + 1):
        try:
            provisional = curve(k_put, k_call)
        except ValueError as e:
            raise SmileConstructionError(f"pillar strikes out of order: {e}") from e

        next_put = strike_from_delta(
            -0.25, OptionSide.PUT, vol_at_strike(provisional, k_put), snapshot, tau, conv
        )
        next_call = strike_from_delta(
            0.25, OptionSide.CALL, vol_at_strike(provisional, k_call), snapshot, tau, conv
        )
        new_steps = (next_put - k_put, next_call - k_call)
        if any(a * b < 0 for a, b in zip(steps, new_steps, strict=True)):
            damping = 0.5
        k_put += damping * new_steps[0]
        k_call += damping * new_steps[1]
        steps = new_steps

        change = max(abs(new_steps[0]) / k_put, abs(new_steps[1]) / k_call)
        if change < settings.smile_strike_tol:
            logger.debug(
                "Pillars converged in {} iterations: K_p={:.6f} K_ATM={:.6f} K_c={:.6f}",
                iteration,
                k_put,
                k_atm,
                k_call,
            )
            break
    else:
        raise SmileConstructionError(
            f"pillar strikes did not converge in {settings.smile_max_iter} iterations"
        )

    try:
        built = curve(k_put, k_call)
    except ValueError as e:
        raise SmileConstructionError(f"pillar strikes out of order: {e}") from e
    if rule == InterpolationRule.QUADRATIC:
        b, c = _quadratic_fit(built)
        built = built.model_copy(
            update={"rule": InterpolationRule.QUADRATIC, "quad_b": b, "quad_c": c}
        )
    return built


def _quadratic_fit(curve: SmileCurve) -> tuple[float, float]:
    """Skew and curvature of sigma(Y) = sigma_ATM + bY + cY^2 through the three pillars."""
    y_put = math.log(curve.k_put / curve.k_atm)
    y_call = math.log(curve.k_call / curve.k_atm)
    lhs = np.array([[y_put, y_put * y_put], [y_call, y_call * y_call]])
    rhs = np.array([curve.sigma_put - curve.sigma_atm, curve.sigma_call - curve.sigma_atm])
    b, c = np.linalg.solve(lhs, rhs)
    return float(b), float(c)


# ──────────────────────────────────────────────
# Interpolation
# ──────────────────────────────────────────────


def vol_at_strike(curve: SmileCurve, strike: float) -> float:
    """Implied vol at strike, exact at the three pillars."""
    if strike <= 0:
        raise DomainError(f"strike must be positive, got {strike}")
    for pillar, vol in zip(curve.strikes, curve.vols, strict=True):
        if strike == pillar:
            return vol
    if curve.is_flat:
        return curve.sigma_atm

    if curve.rule == InterpolationRule.QUADRATIC:
        y = math.log(strike / curve.k_atm)
        vol = curve.sigma_atm + curve.quad_b * y + curve.quad_c * y * y
        return max(vol, settings.smile_vol_floor)

    from vvfx.vanna_volga import closed_form_weights

    snap = curve.snapshot
    tau = curve.tau
    side = OptionSide.CALL if strike >= forward_price(snap, tau) else OptionSide.PUT

    def flat(k: float) -> float:
        return vanilla_price(side, snap.spot, k, curve.sigma_atm, tau, snap.r_d, snap.r_f)

    weights = closed_form_weights(strike, curve.strikes, curve.sigma_atm, tau, snap)
    price = flat(strike)
    for w, k, vol in zip(weights, curve.strikes, curve.vols, strict=True):
        price += w * (vanilla_price(side, snap.spot, k, vol, tau, snap.r_d, snap.r_f) - flat(k))

    floor = settings.smile_vol_floor
    if price <= vanilla_price(side, snap.spot, strike, floor, tau, snap.r_d, snap.r_f):
        return floor
    try:
        return implied_vol(side, price, snap.spot, strike, tau, snap.r_d, snap.r_f)
    except InversionError as e:
        raise InterpolationError(f"no implied vol at K={strike}: {e}") from e


# ──────────────────────────────────────────────
# Butterflies and strangles
# ──────────────────────────────────────────────


def _strangle(curve: SmileCurve, sigma: float) -> tuple[float, float]:
    snap = curve.snapshot
    k_put = strike_from_delta(-0.25, OptionSide.PUT, sigma, snap, curve.tau, curve.conventions)
    k_call = strike_from_delta(0.25, OptionSide.CALL, sigma, snap, curve.tau, curve.conventions)
    return k_put, k_call


def _strangle_mismatch(curve: SmileCurve, spread: float) -> float:
    """Single-vol strangle price minus the same strangle priced on the smile."""
    snap = curve.snapshot
    sigma = curve.sigma_atm + spread
    k_put, k_call = _strangle(curve, sigma)

    def price(side: OptionSide, k: float, vol: float) -> float:
        return vanilla_price(side, snap.spot, k, vol, curve.tau, snap.r_d, snap.r_f)

    single = price(OptionSide.PUT, k_put, sigma) + price(OptionSide.CALL, k_call, sigma)
    smile = price(OptionSide.PUT, k_put, vol_at_strike(curve, k_put)) + price(
        OptionSide.CALL, k_call, vol_at_strike(curve, k_call)
    )
    return single - smile


def broker_strangle(curve: SmileCurve) -> BrokerStrangle:
    """Solve the broker-strangle equality for the 1vol butterfly by secant iteration."""
    tol = settings.strangle_price_tol * curve.snapshot.spot
    sigma_put, sigma_call = curve.sigma_put, curve.sigma_call
    x0 = 0.5 * (sigma_put + sigma_call) - curve.sigma_atm
    f0 = _strangle_mismatch(curve, x0)

    if abs(f0) >= tol:
        x1 = x0 + max(1e-4, 0.1 * abs(x0))
        f1 = _strangle_mismatch(curve, x1)
        for _ in range(settings.smile_max_iter):
            if abs(f1) < tol:
                break
            if f1 == f0:
                raise SmileConstructionError("broker strangle secant stalled")
            x0, x1 = x1, x1 - f1 * (x1 - x0) / (f1 - f0)
            f0, f1 = f1, _strangle_mismatch(curve, x1)
        else:
            raise SmileConstructionError(
                f"broker strangle did not converge in {settings.smile_max_iter} iterations"
            )
        x0 = x1

    sigma = curve.sigma_atm + x0
    k_put, k_call = _strangle(curve, sigma)
    return BrokerStrangle(bf1vol=x0, sigma=sigma, k_put=k_put, k_call=k_call)


def bf1vol_from_curve(curve: SmileCurve) -> float:
    return broker_strangle(curve).bf1vol


def bf2vol_from_bf1vol(
    quote: TenorQuote, snapshot: MarketSnapshot, conv: Conventions | None = None
) -> TenorQuote:
    """
    Find the 2vol butterfly whose smile reprices the quoted 1vol butterfly.

    The bracket around the 1vol value is widened on each attempt; pillar vols are kept
    positive at its lower end.
    """
    if quote.bf_kind == BfKind.TWO_VOL:
        return quote
    target = quote.sigma_bf25
    lowest = 0.5 * abs(quote.sigma_rr25) - quote.sigma_atm + settings.smile_vol_floor

    def two_vol(bf: float) -> TenorQuote:
        return quote.model_copy(update={"sigma_bf25": bf, "bf_kind": BfKind.TWO_VOL})

    def excess(bf: float) -> float:
        return bf1vol_from_curve(build_smile(two_vol(bf), snapshot, conv)) - target

    width = settings.bracket_width

    def widen() -> tuple[float, float]:
        nonlocal width
        lo, hi = max(target - width, lowest), target + width
        width *= 2.0
        if excess(lo) * excess(hi) > 0:
            raise BracketError(lo, hi)
        return lo, hi

    for attempt in Retrying(
        stop=stop_after_attempt(settings.bracket_attempts),
        retry=retry_if_exception_type(BracketError),
        reraise=True,
    ):
        with attempt:
            lo, hi = widen()

    bf2 = brentq(excess, lo, hi, xtol=1e-3 * settings.bf2vol_tol)
    logger.debug("bf1vol {:.6f} -> bf2vol {:.6f} on [{:.4f}, {:.4f}]", target, bf2, lo, hi)
    return two_vol(bf2)


def vega_weighted_strangle(curve: SmileCurve) -> float:
    """Vega-weighted average of the wing vols, vegas at sigma_ATM."""
    snap = curve.snapshot

    def vega(k: float) -> float:
        return greeks(
            OptionSide.CALL, snap.spot, k, curve.sigma_atm, curve.tau, snap.r_d, snap.r_f
        ).vega

    v_put, v_call = vega(curve.k_put), vega(curve.k_call)
    return (curve.sigma_put * v_put + curve.sigma_call * v_call) / (v_put + v_call)


# ──────────────────────────────────────────────
# Reporting
# ──────────────────────────────────────────────


def convention_audit(
    quote: TenorQuote,
    snapshot: MarketSnapshot,
    k_put: float,
    k_call: float,
) -> list[ConventionAuditEntry]:
    """Rebuild the pillars under all four delta/premium conventions, best match first."""
    entries = []
    for delta_style in DeltaStyle:
        for premium_style in PremiumStyle:
            conv = Conventions(
                delta_style=delta_style,
                premium_style=premium_style,
                atm_style=(
                    AtmStyle.DN_EXCLUDED
                    if premium_style == PremiumStyle.EXCLUDED
                    else AtmStyle.DN_INCLUDED
                ),
            )
            try:
                curve = build_smile(quote, snapshot, conv)
            except NumericalError as e:
                logger.warning("Convention audit skipped {}: {}", conv, e)
                continue
            miss = max(abs(curve.k_put - k_put), abs(curve.k_call - k_call))
            entries.append(
                ConventionAuditEntry(
                    conventions=conv, k_put=curve.k_put, k_call=curve.k_call, max_error=miss
                )
            )
    return sorted(entries, key=lambda e: e.max_error)


def smile_report(curve: SmileCurve, grid_points: int = 21) -> SmileReport:
    stdev = curve.sigma_atm * math.sqrt(curve.tau)
    lo = math.log(curve.k_put) - 0.5 * stdev
    hi = math.log(curve.k_call) + 0.5 * stdev
    strikes = np.exp(np.linspace(lo, hi, grid_points))
    broker = broker_strangle(curve)
    return SmileReport(
        tau=curve.tau,
        k_put=curve.k_put,
        k_atm=curve.k_atm,
        k_call=curve.k_call,
        sigma_put=curve.sigma_put,
        sigma_atm=curve.sigma_atm,
        sigma_call=curve.sigma_call,
        bf1vol=broker.bf1vol,
        k_put_broker=broker.k_put,
        k_call_broker=broker.k_call,
        vega_weighted_strangle=vega_weighted_strangle(curve),
        grid=[(float(k), vol_at_strike(curve, float(k))) for k in strikes],
    )


# ──────────────────────────────────────────────
# Custom Exceptions
# ──────────────────────────────────────────────


class SmileConstructionError(NumericalError):
    pass


class InterpolationError(NumericalError):
    pass


class BracketError(NumericalError):
    """No sign change on the searched interval."""

    def __init__(self, lo: float, hi: float):
        self.lo = lo
        self.hi = hi
        super().__init__(f"no sign change on [{lo:.6f}, {hi:.6f}]")
