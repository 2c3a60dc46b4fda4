"""
Pricing orchestrator: smile and hedge caches, the full pipeline from snapshot to
clamped Vanna-Volga price, issue summaries, market-data sensitivities and barrier
ladder sweeps.
"""

import concurrent.futures as cf
import math
import threading
from collections import defaultdict

from cachetools import LRUCache
from loguru import logger
from pydantic import ValidationError
from scipy.optimize import brentq

from vvfx.arbitrage import clamp, decompose, single_barrier_legs, vanilla_of, wko_bounds
from vvfx.bs import no_touch_probability
from vvfx.config import settings
from vvfx.conventions import NoSolutionError
from vvfx.exit_metrics import vicinity
from vvfx.models import (
    BarrierSide,
    BfKind,
    ClampReport,
    ClampRule,
    ConstituentPrice,
    DomainError,
    ErrorSeverity,
    HedgeSet,
    InterpolationRule,
    IssueSummary,
    MarketSnapshot,
    NumericalError,
    OptionKind,
    OptionSpec,
    PricingFlag,
    PricingIssue,
    PricingResult,
    SmileCurve,
    SweepRow,
    SweepSpec,
    TenorQuote,
    Variant,
    VVParams,
)
from vvfx.smile import bf2vol_from_bf1vol, build_smile
from vvfx.vanna_volga import build_hedge_set, vv_price

# ──────────────────────────────────────────────
# Caches
# ──────────────────────────────────────────────

_curve_cache: LRUCache = LRUCache(maxsize=settings.smile_cache_size)
_hedge_cache: LRUCache = LRUCache(maxsize=settings.smile_cache_size)
_cache_lock = threading.Lock()


def clear_caches() -> None:
    with _cache_lock:
        _curve_cache.clear()
        _hedge_cache.clear()


def default_params() -> VVParams:
    """Configuration 4: a = c, b = 0 under the first-exit-time measure."""
    return VVParams(
        variant=Variant(settings.default_variant),
        a=settings.default_a,
        b=0.0,
        c=settings.default_a,
        gamma_star=settings.gamma_star,
    )


def quote_for(snapshot: MarketSnapshot, tau: float) -> TenorQuote:
    """The snapshot's quote for exactly this tenor; there is no interpolation across tenors."""
    for quote in snapshot.quotes:
        if abs(quote.tau - tau) < 1e-9:
            return quote
    available = ", ".join(f"{q.tau:g}" for q in snapshot.quotes) or "none"
    raise DomainError(f"no quote for tau={tau:g} in snapshot (available: {available})")


def curve_for(
    snapshot: MarketSnapshot,
    tau: float,
    rule: InterpolationRule = InterpolationRule.VANNA_VOLGA,
) -> SmileCurve:
    key = (snapshot.model_dump_json(), round(tau, 12), rule)
    with _cache_lock:
        if key in _curve_cache:
            return _curve_cache[key]

    quote = quote_for(snapshot, tau)
    if quote.bf_kind == BfKind.ONE_VOL:
        quote = bf2vol_from_bf1vol(quote, snapshot)
    curve = build_smile(quote, snapshot, rule=rule)
    logger.info(
        "Built smile {} tau={:g}: K_p={:.6f} K_ATM={:.6f} K_c={:.6f}",
        snapshot.pair or "?",
        tau,
        curve.k_put,
        curve.k_atm,
        curve.k_call,
    )
    with _cache_lock:
        _curve_cache[key] = curve
    return curve


def hedge_set_for(curve: SmileCurve) -> HedgeSet:
    key = curve.model_dump_json()
    with _cache_lock:
        if key in _hedge_cache:
            return _hedge_cache[key]
    hedges = build_hedge_set(curve)
    with _cache_lock:
        _hedge_cache[key] = hedges
    return hedges


# ──────────────────────────────────────────────
# Pipeline
# ──────────────────────────────────────────────

_CLAMP_FLAGS = {
    ClampRule.FLOOR_ZERO: PricingFlag.CLAMPED_FLOOR,
    ClampRule.KO_LE_VANILLA: PricingFlag.CLAMPED_VANILLA,
    ClampRule.DKO_LE_KO1: PricingFlag.CLAMPED_SINGLE_KO,
    ClampRule.DKO_LE_KO2: PricingFlag.CLAMPED_SINGLE_KO,
    ClampRule.WKO_BOUNDS: PricingFlag.CLAMPED_VANILLA,
}

_SINGLE_KO = {
    OptionKind.UP_OUT_CALL,
    OptionKind.UP_OUT_PUT,
    OptionKind.DOWN_OUT_CALL,
    OptionKind.DOWN_OUT_PUT,
}


def _price_constituent(
    leg: OptionSpec,
    curve: SmileCurve,
    hedges: HedgeSet,
    params: VVParams,
    include_vega: bool,
) -> tuple[PricingResult, ClampReport]:
    """VV price of one constituent, clamped against its own VV-priced references."""
    measure = vicinity(leg, curve.sigma_atm, curve.snapshot, params.variant)
    raw = vv_price(leg, curve, params, measure.gamma, hedges, include_vega)
    for flag in measure.flags:
        if flag not in raw.flags:
            raw.flags.append(flag)

    def reference(spec: OptionSpec) -> float:
        return _price_constituent(spec, curve, hedges, params, include_vega)[1].clamped

    kind = leg.kind
    vanilla_ref: float | None = None
    singles: tuple[float | None, float | None] = (None, None)
    if kind in _SINGLE_KO:
        vanilla_ref = reference(vanilla_of(leg))
    elif kind in (OptionKind.DKO_CALL, OptionKind.DKO_PUT):
        vanilla_ref = reference(vanilla_of(leg))
        lower, upper = single_barrier_legs(leg)
        singles = (reference(lower), reference(upper))
    elif kind == OptionKind.NO_TOUCH:
        vanilla_ref = math.exp(-curve.snapshot.r_d * leg.tau)
    elif kind == OptionKind.DOUBLE_NO_TOUCH:
        vanilla_ref = math.exp(-curve.snapshot.r_d * leg.tau)
        lower, upper = single_barrier_legs(leg)
        singles = (reference(lower), reference(upper))

    return raw, clamp(raw.vv_price, vanilla_ref, singles)


def _issues_for(flags: list[PricingFlag], spec: OptionSpec) -> list[PricingIssue]:
    issues = []
    if PricingFlag.SERIES_WARNING in flags:
        issues.append(
            PricingIssue(
                code="series_truncated",
                message=f"Image series for {spec.kind} stopped before reaching tolerance",
                severity=ErrorSeverity.DEGRADED,
                source="bs",
                context={"max_terms": settings.series_max_terms},
            )
        )
    if PricingFlag.GRID_WARNING in flags:
        issues.append(
            PricingIssue(
                code="grid_coarse",
                message="First-exit-time grid failed the half-grid comparison",
                severity=ErrorSeverity.DEGRADED,
                source="exit_metrics",
                context={"nodes": settings.pde_nodes, "steps": settings.pde_steps},
            )
        )
    clamped = [f for f in flags if f.value.startswith("clamped")]
    if clamped:
        issues.append(
            PricingIssue(
                code="clamped",
                message=f"No-arbitrage bounds applied: {', '.join(clamped)}",
                severity=ErrorSeverity.RECOVERABLE,
                source="arbitrage",
            )
        )
    return issues


def price_instrument(
    spec: OptionSpec,
    snapshot: MarketSnapshot,
    params: VVParams | None = None,
    include_vega: bool = False,
) -> PricingResult:
    """
    Smile -> hedge set -> vicinity -> VV price per constituent -> clamps -> recombination.

    Knock-ins and touches are priced through their replication; each constituent is
    clamped separately and the clamped prices recombined with their signs.
    """
    params = params or default_params()
    curve = curve_for(snapshot, spec.tau)
    hedges = hedge_set_for(curve)

    constituents: list[ConstituentPrice] = []
    flags: list[PricingFlag] = []
    bstv = vega_term = vanna_term = volga_term = raw_total = final = 0.0
    primary: PricingResult | None = None
    first: PricingResult | None = None

    for sign, leg in decompose(spec):
        raw, report = _price_constituent(leg, curve, hedges, params, include_vega)
        constituents.append(
            ConstituentPrice(
                sign=sign,
                spec=leg,
                bstv=raw.bstv,
                vv_price=raw.vv_price,
                final_price=report.clamped,
                gamma=raw.gamma,
                applied_rules=report.applied_rules,
            )
        )
        bstv += sign * raw.bstv
        vega_term += sign * raw.vega_term
        vanna_term += sign * raw.vanna_term
        volga_term += sign * raw.volga_term
        raw_total += sign * raw.vv_price
        final += sign * report.clamped

        leg_flags = raw.flags + [_CLAMP_FLAGS[r] for r in report.applied_rules]
        flags.extend(f for f in leg_flags if f not in flags)
        first = first or raw
        has_barrier = leg.lower_barrier is not None or leg.upper_barrier is not None
        if primary is None and has_barrier:
            primary = raw

    primary = primary or first
    assert primary is not None
    return PricingResult(
        kind=spec.kind,
        bstv=bstv,
        vega_term=vega_term,
        vanna_term=vanna_term,
        volga_term=volga_term,
        p_vanna=primary.p_vanna,
        p_volga=primary.p_volga,
        gamma=primary.gamma,
        vv_price=raw_total,
        final_price=final,
        notional=spec.notional,
        flags=flags,
        constituents=constituents,
        issues=_issues_for(flags, spec),
    )


def clamp_window_price(
    window_price: float,
    spec: OptionSpec,
    snapshot: MarketSnapshot,
    params: VVParams | None = None,
) -> ClampReport:
    """Bound an externally priced window knock-out by the full-tenor knock-out and the vanilla."""
    if spec.kind not in _SINGLE_KO | {OptionKind.DKO_CALL, OptionKind.DKO_PUT}:
        raise DomainError(f"window bounds need a knock-out template, got {spec.kind}")
    vanilla = price_instrument(vanilla_of(spec), snapshot, params).final_price
    knock_out = price_instrument(spec, snapshot, params).final_price
    return wko_bounds(window_price, vanilla, knock_out)


# ──────────────────────────────────────────────
# Error Summarization
# ──────────────────────────────────────────────


def summarize_issues(issues: list[PricingIssue]) -> list[IssueSummary]:
    """Group issues by source component, reporting the worst severity of each."""
    by_source: dict[str, list[PricingIssue]] = defaultdict(list)
    for issue in issues:
        by_source[issue.source].append(issue)

    summaries = []
    for source, group in by_source.items():
        worst = max(group, key=lambda i: list(ErrorSeverity).index(i.severity))
        summaries.append(
            IssueSummary(
                component=source,
                count=len(group),
                sample=worst.message,
                severity=worst.severity.value,
            )
        )
    return summaries


# ──────────────────────────────────────────────
# Market-data sensitivities
# ──────────────────────────────────────────────


def market_sensitivities(
    spec: OptionSpec,
    snapshot: MarketSnapshot,
    params: VVParams | None = None,
    bump: float = 1e-3,
) -> tuple[float, float]:
    """(dPrice/dsigma_RR25, dPrice/dsigma_BF25 2vol) by central bumps of the tenor quote."""
    quote = quote_for(snapshot, spec.tau)
    if quote.bf_kind == BfKind.ONE_VOL:
        quote = bf2vol_from_bf1vol(quote, snapshot)

    def price(field: str, shift: float) -> float:
        bumped = TenorQuote.model_validate(
            {**quote.model_dump(), field: getattr(quote, field) + shift}
        )
        quotes = [bumped if abs(q.tau - spec.tau) < 1e-9 else q for q in snapshot.quotes]
        snap = snapshot.model_copy(update={"quotes": quotes})
        return price_instrument(spec, snap, params).final_price

    lambda_rr = (price("sigma_rr25", bump) - price("sigma_rr25", -bump)) / (2.0 * bump)
    lambda_bf = (price("sigma_bf25", bump) - price("sigma_bf25", -bump)) / (2.0 * bump)
    return lambda_rr, lambda_bf


# ──────────────────────────────────────────────
# Sweeps
# ──────────────────────────────────────────────


def touch_probability(
    level: float, side: BarrierSide, sigma: float, tau: float, snapshot: MarketSnapshot
) -> float:
    """Domestic-measure probability of touching a single barrier before tau."""
    lower, upper = (level, None) if side == BarrierSide.LOWER else (None, level)
    survival, _ = no_touch_probability(
        snapshot.spot, lower, upper, sigma, tau, snapshot.r_d - snapshot.r_f
    )
    return 1.0 - survival


def barrier_for_touch_probability(
    target: float,
    side: BarrierSide,
    sigma: float,
    tau: float,
    snapshot: MarketSnapshot,
) -> float:
    """Invert the single-barrier touch probability for the barrier level."""
    if not 0.0 < target < 1.0:
        raise DomainError(f"touch probability target must lie in (0, 1), got {target}")
    direction = 1.0 if side == BarrierSide.UPPER else -1.0
    reach = 12.0 * sigma * math.sqrt(tau) + abs(snapshot.r_d - snapshot.r_f) * tau

    def excess(distance: float) -> float:
        level = snapshot.spot * math.exp(direction * distance)
        return touch_probability(level, side, sigma, tau, snapshot) - target

    lo, hi = 1e-10, reach
    if excess(lo) * excess(hi) > 0:
        raise NoSolutionError(
            f"touch probability {target} not reachable on the {side} side within {reach:.4f}"
        )
    distance = brentq(excess, lo, hi, xtol=1e-14)
    return snapshot.spot * math.exp(direction * distance)


def _sweep_row(
    index: int,
    sweep: SweepSpec,
    snapshot: MarketSnapshot,
    params: VVParams,
    sigma: float,
    fixed_level: float | None,
) -> SweepRow:
    ladder = sweep.ladder
    template = sweep.template
    side = ladder.side
    row = SweepRow(index=index)
    try:
        if ladder.levels is not None:
            level = ladder.levels[index]
        else:
            assert ladder.touch_probabilities is not None
            target = ladder.touch_probabilities[index]
            level = barrier_for_touch_probability(target, side, sigma, template.tau, snapshot)
        row.level = level
        row.touch_probability = touch_probability(level, side, sigma, template.tau, snapshot)

        update = {f"{side.value}_barrier": level}
        if fixed_level is not None:
            other = BarrierSide.UPPER if side == BarrierSide.LOWER else BarrierSide.LOWER
            update[f"{other.value}_barrier"] = fixed_level
        spec = OptionSpec.model_validate({**template.model_dump(), **update})

        for variant in sweep.variants:
            result = price_instrument(spec, snapshot, params.model_copy(update={"variant": variant}))
            row.bstv = result.bstv
            row.modsv[variant.value] = result.final_price - result.bstv
    except (DomainError, NumericalError, ValidationError) as e:
        logger.warning("Sweep row {} failed: {}", index, e)
        row.error = str(e).splitlines()[0]
    return row


def run_sweep(
    sweep: SweepSpec,
    snapshot: MarketSnapshot,
    params: VVParams | None = None,
) -> list[SweepRow]:
    """One row per ladder point, priced in parallel and returned in ladder order."""
    params = params or default_params()
    tau = sweep.template.tau
    sigma = curve_for(snapshot, tau).sigma_atm
    ladder = sweep.ladder
    count = len(ladder.levels if ladder.levels is not None else ladder.touch_probabilities or [])

    fixed_level = None
    if ladder.fixed_probability is not None:
        other = BarrierSide.UPPER if ladder.side == BarrierSide.LOWER else BarrierSide.LOWER
        fixed_level = barrier_for_touch_probability(
            ladder.fixed_probability, other, sigma, tau, snapshot
        )
        logger.info("Fixed {} barrier at {:.6f}", other, fixed_level)

    rows: dict[int, SweepRow] = {}
    with cf.ThreadPoolExecutor(max_workers=settings.threads) as executor:
        futures = {
            executor.submit(_sweep_row, i, sweep, snapshot, params, sigma, fixed_level): i
            for i in range(count)
        }
        for future in cf.as_completed(futures):
            rows[futures[future]] = future.result()

    failed = sum(1 for r in rows.values() if r.error)
    logger.info("Sweep finished: {} rows, {} failed", count, failed)
    return [rows[i] for i in range(count)]
