"""
Black-Scholes closed forms: vanillas, implied vol, vanilla Greeks, continuously
monitored knock-outs (single and double barrier) and touch products.

Barrier values come from the method of images for Brownian motion with drift in
log-spot: a single barrier needs one image, a corridor needs the doubly infinite
image series, truncated once a pair of terms drops below tolerance.
"""

import math
from collections.abc import Iterator

from loguru import logger
from scipy.special import log_ndtr
from scipy.stats import norm

from vvfx.config import settings
from vvfx.conventions import d1_d2
from vvfx.models import (
    DomainError,
    GreeksTriple,
    MarketSnapshot,
    NumericalError,
    OptionKind,
    OptionSide,
    OptionSpec,
    PricingFlag,
)

# ──────────────────────────────────────────────
# Vanillas
# ──────────────────────────────────────────────


def vanilla_price(
    side: OptionSide,
    spot: float,
    strike: float,
    sigma: float,
    tau: float,
    r_d: float,
    r_f: float,
) -> float:
    """Garman-Kohlhagen price per unit of Ccy1 notional, in Ccy2."""
    if spot <= 0 or strike <= 0:
        raise DomainError("spot and strike must be positive")
    if sigma < 0 or tau < 0:
        raise DomainError("sigma and tau must be non-negative")

    omega = 1.0 if side == OptionSide.CALL else -1.0
    df_d = math.exp(-r_d * tau)
    forward = spot * math.exp((r_d - r_f) * tau)
    if sigma * math.sqrt(tau) < settings.degenerate_stdev:
        return df_d * max(omega * (forward - strike), 0.0)

    d1, d2 = d1_d2(forward, strike, sigma, tau)
    return df_d * omega * (forward * norm.cdf(omega * d1) - strike * norm.cdf(omega * d2))


def greeks(
    side: OptionSide,
    spot: float,
    strike: float,
    sigma: float,
    tau: float,
    r_d: float,
    r_f: float,
) -> GreeksTriple:
    """Vega, Vanna and Volga. Identical for calls and puts by parity."""
    if sigma <= 0 or tau <= 0:
        raise DomainError("greeks need sigma > 0 and tau > 0")
    forward = spot * math.exp((r_d - r_f) * tau)
    d1, d2 = d1_d2(forward, strike, sigma, tau)
    df_f = math.exp(-r_f * tau)
    density = norm.pdf(d1)
    vega = spot * df_f * math.sqrt(tau) * density
    return GreeksTriple(
        vega=vega,
        vanna=-df_f * density * d2 / sigma,
        volga=vega * d1 * d2 / sigma,
    )


def implied_vol(
    side: OptionSide,
    price: float,
    spot: float,
    strike: float,
    tau: float,
    r_d: float,
    r_f: float,
) -> float:
    """Newton on vega inside a shrinking bracket, bisecting whenever Newton leaves it."""
    if tau <= 0:
        raise DomainError("implied_vol needs tau > 0")
    omega = 1.0 if side == OptionSide.CALL else -1.0
    df_d = math.exp(-r_d * tau)
    forward = spot * math.exp((r_d - r_f) * tau)
    lower = df_d * max(omega * (forward - strike), 0.0)
    upper = df_d * (forward if side == OptionSide.CALL else strike)

    if price < lower - 1e-12 * spot or price >= upper:
        raise InversionError(
            f"price {price} outside no-arbitrage bounds [{lower}, {upper})"
        )
    if price <= lower + 1e-15 * spot:
        return 0.0

    lo, hi = 0.0, settings.iv_max_vol
    if vanilla_price(side, spot, strike, hi, tau, r_d, r_f) < price:
        raise InversionError(f"implied vol above the {hi:.0%} cap")

    moneyness = abs(math.log(forward / strike))
    sigma = math.sqrt(2.0 * moneyness / tau) if moneyness > 1e-8 else 0.2
    sigma = min(max(sigma, 1e-3), 0.5 * hi)

    for _ in range(settings.iv_max_iter):
        diff = vanilla_price(side, spot, strike, sigma, tau, r_d, r_f) - price
        if diff == 0.0:
            return sigma
        if diff > 0:
            hi = sigma
        else:
            lo = sigma

        vega = greeks(side, spot, strike, sigma, tau, r_d, r_f).vega
        candidate = sigma - diff / vega if vega > 0 else math.nan
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - sigma) < 1e-14 or hi - lo < 1e-15:
            return candidate
        sigma = candidate

    raise InversionError(f"implied vol did not converge after {settings.iv_max_iter} steps")


# ──────────────────────────────────────────────
# Image series
# ──────────────────────────────────────────────


def _log_ndtr_diff(lo: float, hi: float) -> float:
    """log(N(hi) - N(lo)) without cancellation in either tail."""
    if hi <= lo:
        return -math.inf
    if lo > 0:
        lo, hi = -hi, -lo
    log_hi = float(log_ndtr(hi))
    log_lo = float(log_ndtr(lo))
    return log_hi + math.log1p(-math.exp(log_lo - log_hi))


def _images(log_lower: float, log_upper: float) -> Iterator[list[tuple[float, float]]]:
    """Batches of (shift, sign) images; the first batch is the direct term plus reflections."""
    lower_set = math.isfinite(log_lower)
    upper_set = math.isfinite(log_upper)
    if not (lower_set or upper_set):
        yield [(0.0, 1.0)]
        return
    if not lower_set:
        yield [(0.0, 1.0), (2.0 * log_upper, -1.0)]
        return
    if not upper_set:
        yield [(0.0, 1.0), (2.0 * log_lower, -1.0)]
        return

    width = log_upper - log_lower
    yield [(0.0, 1.0), (2.0 * log_upper, -1.0)]
    n = 1
    while True:
        shift = 2.0 * n * width
        yield [
            (shift, 1.0),
            (-shift, 1.0),
            (2.0 * log_upper - shift, -1.0),
            (2.0 * log_upper + shift, -1.0),
        ]
        n += 1


def _killed_moments(
    log_lower: float,
    log_upper: float,
    region: tuple[float, float],
    nu: float,
    sigma: float,
    tau: float,
    asset_weight: float,
    cash_weight: float,
    scale: float,
) -> tuple[float, float, bool]:
    """
    Integrate the killed log-spot density over region = (c, d).

    Returns (cash, asset, converged) where cash = P(alive, X_T in region) and
    asset = E[exp(X_T); alive, X_T in region], X_T = ln(S_T / S_t).
    """
    c, d = region
    if c >= d:
        return 0.0, 0.0, True
    stdev = sigma * math.sqrt(tau)
    variance = stdev * stdev
    drift = nu * tau
    tilt = nu / (sigma * sigma)

    corridor = math.isfinite(log_lower) and math.isfinite(log_upper)
    cash = 0.0
    asset = 0.0
    for count, batch in enumerate(_images(log_lower, log_upper), start=1):
        batch_size = 0.0
        for shift, sign in batch:
            mean = shift + drift
            weight = tilt * shift
            cash_term = sign * math.exp(
                weight + _log_ndtr_diff((c - mean) / stdev, (d - mean) / stdev)
            )
            asset_term = sign * math.exp(
                weight
                + mean
                + 0.5 * variance
                + _log_ndtr_diff((c - mean - variance) / stdev, (d - mean - variance) / stdev)
            )
            cash += cash_term
            asset += asset_term
            batch_size += cash_weight * abs(cash_term) + asset_weight * abs(asset_term)
        if not corridor:
            return cash, asset, True
        if count == 1:
            continue
        if batch_size < settings.series_tol * scale:
            return cash, asset, True
        if count >= settings.series_max_terms:
            logger.warning(
                "Image series stopped after {} terms, last term {:.3e}", count, batch_size
            )
            return cash, asset, False
    return cash, asset, True  # pragma: no cover


def _log_barriers(
    spot: float, lower: float | None, upper: float | None
) -> tuple[float, float]:
    log_lower = math.log(lower / spot) if lower is not None else -math.inf
    log_upper = math.log(upper / spot) if upper is not None else math.inf
    return log_lower, log_upper


def _breached(spot: float, lower: float | None, upper: float | None) -> bool:
    return (lower is not None and spot <= lower) or (upper is not None and spot >= upper)


def no_touch_probability(
    spot: float,
    lower: float | None,
    upper: float | None,
    sigma: float,
    tau: float,
    mu: float,
) -> tuple[float, bool]:
    """P(no barrier touched before tau) for GBM with drift mu. Returns (probability, converged)."""
    if _breached(spot, lower, upper):
        return 0.0, True
    if lower is None and upper is None:
        return 1.0, True
    if sigma * math.sqrt(tau) < settings.degenerate_stdev:
        terminal = spot * math.exp(mu * tau)
        return (0.0 if _breached(terminal, lower, upper) else 1.0), True

    log_lower, log_upper = _log_barriers(spot, lower, upper)
    cash, _, converged = _killed_moments(
        log_lower,
        log_upper,
        (log_lower, log_upper),
        mu - 0.5 * sigma * sigma,
        sigma,
        tau,
        asset_weight=0.0,
        cash_weight=1.0,
        scale=1.0,
    )
    return min(max(cash, 0.0), 1.0), converged


# ──────────────────────────────────────────────
# Knock-outs
# ──────────────────────────────────────────────


def _knock_out(
    side: OptionSide,
    strike: float,
    lower: float | None,
    upper: float | None,
    sigma: float,
    tau: float,
    snapshot: MarketSnapshot,
) -> tuple[float, list[PricingFlag]]:
    spot = snapshot.spot
    if _breached(spot, lower, upper):
        return 0.0, [PricingFlag.KNOCKED]

    omega = 1.0 if side == OptionSide.CALL else -1.0
    df_d = math.exp(-snapshot.r_d * tau)
    forward = spot * math.exp((snapshot.r_d - snapshot.r_f) * tau)
    if sigma * math.sqrt(tau) < settings.degenerate_stdev:
        if _breached(forward, lower, upper):
            return 0.0, []
        return df_d * max(omega * (forward - strike), 0.0), []

    log_lower, log_upper = _log_barriers(spot, lower, upper)
    log_strike = math.log(strike / spot)
    if side == OptionSide.CALL:
        region = (max(log_strike, log_lower), log_upper)
    else:
        region = (log_lower, min(log_strike, log_upper))

    cash, asset, converged = _killed_moments(
        log_lower,
        log_upper,
        region,
        snapshot.r_d - snapshot.r_f - 0.5 * sigma * sigma,
        sigma,
        tau,
        asset_weight=spot,
        cash_weight=strike,
        scale=spot,
    )
    price = df_d * omega * (spot * asset - strike * cash)
    return price, ([] if converged else [PricingFlag.SERIES_WARNING])


_SINGLE_OUT = {
    OptionKind.UP_OUT_CALL: OptionSide.CALL,
    OptionKind.DOWN_OUT_CALL: OptionSide.CALL,
    OptionKind.UP_OUT_PUT: OptionSide.PUT,
    OptionKind.DOWN_OUT_PUT: OptionSide.PUT,
}


def single_barrier_ko_price(
    spec: OptionSpec, sigma: float, snapshot: MarketSnapshot
) -> tuple[float, list[PricingFlag]]:
    """Continuously monitored single-barrier knock-out. Spot on the barrier prices 0, flagged knocked."""
    if spec.kind not in _SINGLE_OUT:
        raise DomainError(f"{spec.kind} is not a single-barrier knock-out")
    assert spec.strike is not None
    return _knock_out(
        _SINGLE_OUT[spec.kind],
        spec.strike,
        spec.lower_barrier,
        spec.upper_barrier,
        sigma,
        spec.tau,
        snapshot,
    )


def dko_price(
    spec: OptionSpec, sigma: float, snapshot: MarketSnapshot
) -> tuple[float, list[PricingFlag]]:
    """Double knock-out from the image series; flags series_warning when truncated early."""
    if spec.kind not in (OptionKind.DKO_CALL, OptionKind.DKO_PUT):
        raise DomainError(f"{spec.kind} is not a double knock-out")
    assert spec.strike is not None and spec.side is not None
    return _knock_out(
        spec.side,
        spec.strike,
        spec.lower_barrier,
        spec.upper_barrier,
        sigma,
        spec.tau,
        snapshot,
    )


# ──────────────────────────────────────────────
# Touch products
# ──────────────────────────────────────────────


def touch_prices(
    spec: OptionSpec, sigma: float, snapshot: MarketSnapshot
) -> tuple[float, list[PricingFlag]]:
    """One unit of domestic currency paid at expiry on touch (OT/DOT) or no touch (NT/DNT)."""
    if spec.kind not in (
        OptionKind.ONE_TOUCH,
        OptionKind.NO_TOUCH,
        OptionKind.DOUBLE_ONE_TOUCH,
        OptionKind.DOUBLE_NO_TOUCH,
    ):
        raise DomainError(f"{spec.kind} is not a touch product")
    if settings.touch_payout_currency != "domestic":
        raise DomainError(
            f"touch payout currency {settings.touch_payout_currency!r} is not supported"
        )

    df_d = math.exp(-snapshot.r_d * spec.tau)
    survival, converged = no_touch_probability(
        snapshot.spot,
        spec.lower_barrier,
        spec.upper_barrier,
        sigma,
        spec.tau,
        snapshot.r_d - snapshot.r_f,
    )
    flags: list[PricingFlag] = []
    if _breached(snapshot.spot, spec.lower_barrier, spec.upper_barrier):
        flags.append(PricingFlag.KNOCKED)
    if not converged:
        flags.append(PricingFlag.SERIES_WARNING)

    no_touch = df_d * survival
    if spec.kind in (OptionKind.NO_TOUCH, OptionKind.DOUBLE_NO_TOUCH):
        return no_touch, flags
    return df_d - no_touch, flags


def double_one_touch_from_spreads(
    spec: OptionSpec,
    sigma: float,
    snapshot: MarketSnapshot,
    strike: float | None = None,
    half_width: float | None = None,
) -> float:
    """
    DOT rebuilt from double knock-in spreads.

    A long DKI call spread plus a long DKI put spread on (K - h, K + h) pays 2h on
    every path that touched a barrier, whatever the terminal spot.
    """
    if spec.kind != OptionKind.DOUBLE_ONE_TOUCH:
        raise DomainError("double_one_touch_from_spreads needs a double one-touch spec")
    assert spec.lower_barrier is not None and spec.upper_barrier is not None
    strike = strike if strike is not None else snapshot.spot
    half_width = half_width if half_width is not None else 0.25 * (
        spec.upper_barrier - spec.lower_barrier
    )
    if half_width <= 0 or strike - half_width <= 0:
        raise DomainError("spread strikes must stay positive")

    def dki(kind: OptionKind, k: float) -> float:
        leg = OptionSpec(
            kind=kind,
            tau=spec.tau,
            strike=k,
            lower_barrier=spec.lower_barrier,
            upper_barrier=spec.upper_barrier,
        )
        return bs_price(leg, sigma, snapshot)[0]

    k_lo, k_hi = strike - half_width, strike + half_width
    call_spread = dki(OptionKind.DKI_CALL, k_lo) - dki(OptionKind.DKI_CALL, k_hi)
    put_spread = dki(OptionKind.DKI_PUT, k_hi) - dki(OptionKind.DKI_PUT, k_lo)
    return (call_spread + put_spread) / (2.0 * half_width)


# ──────────────────────────────────────────────
# Dispatcher
# ──────────────────────────────────────────────


def bs_price(
    spec: OptionSpec, sigma: float, snapshot: MarketSnapshot
) -> tuple[float, list[PricingFlag]]:
    """Flat-vol value of any supported instrument; composites go through their replication."""
    from vvfx.arbitrage import decompose

    kind = spec.kind
    if kind == OptionKind.CASH:
        return math.exp(-snapshot.r_d * spec.tau), []
    if kind in (OptionKind.VANILLA_CALL, OptionKind.VANILLA_PUT):
        assert spec.strike is not None and spec.side is not None
        price = vanilla_price(
            spec.side, snapshot.spot, spec.strike, sigma, spec.tau, snapshot.r_d, snapshot.r_f
        )
        return price, []
    if kind in _SINGLE_OUT:
        return single_barrier_ko_price(spec, sigma, snapshot)
    if kind in (OptionKind.DKO_CALL, OptionKind.DKO_PUT):
        return dko_price(spec, sigma, snapshot)
    if kind in (OptionKind.NO_TOUCH, OptionKind.DOUBLE_NO_TOUCH):
        return touch_prices(spec, sigma, snapshot)

    total = 0.0
    flags: list[PricingFlag] = []
    for sign, leg in decompose(spec):
        price, leg_flags = bs_price(leg, sigma, snapshot)
        total += sign * price
        flags.extend(f for f in leg_flags if f not in flags)
    return total, flags


# ──────────────────────────────────────────────
# Custom Exceptions
# ──────────────────────────────────────────────


class InversionError(NumericalError):
    pass
