"""
Closed forms against the Monte Carlo oracle: replication identities, interpolation weights,
barrier vicinity measures and double-barrier series prices.
"""

import concurrent.futures as cf
import math
from collections.abc import Callable

import numpy as np
from loguru import logger

from vvfx.bs import bs_price, greeks
from vvfx.config import settings
from vvfx.exit_metrics import fet_solve, survival_probability
from vvfx.mc import default_config, mc_first_exit, mc_price
from vvfx.models import (
    MarketSnapshot,
    McConfig,
    OptionKind,
    OptionSide,
    OptionSpec,
    TenorQuote,
    VerifyCheck,
)
from vvfx.vanna_volga import closed_form_weights

# Number of standard errors an oracle comparison may miss by
SE_BAND = 3.0


def reference_market() -> MarketSnapshot:
    """S = 1.3, tau = 1.3, r_d = 5%, r_f = 3%, flat 20% vol."""
    return MarketSnapshot(
        pair="EURUSD",
        spot=1.3,
        r_d=0.05,
        r_f=0.03,
        quotes=[TenorQuote(tau=1.3, sigma_atm=0.2, sigma_rr25=0.0, sigma_bf25=0.0)],
    )


def _market(snapshot: MarketSnapshot | None) -> tuple[MarketSnapshot, float, float]:
    snapshot = snapshot or reference_market()
    if not snapshot.quotes:
        snapshot = snapshot.model_copy(update={"quotes": reference_market().quotes})
    quote = snapshot.quotes[0]
    return snapshot, quote.sigma_atm, quote.tau


def _oracle_check(
    name: str, model: float, estimate: float, se: float, rel: float = 0.0
) -> VerifyCheck:
    tolerance = max(SE_BAND * se, rel * abs(estimate), 1e-12)
    return VerifyCheck(
        name=name,
        passed=abs(model - estimate) <= tolerance,
        model_value=model,
        oracle_value=estimate,
        tolerance=tolerance,
        detail=f"se={se:.2e}",
    )


# ──────────────────────────────────────────────
# Deterministic checks
# ──────────────────────────────────────────────


def check_replication(snapshot: MarketSnapshot, sigma: float, tau: float) -> VerifyCheck:
    """KI + KO = vanilla and OT + NT = DF_d over a grid of strikes and barriers."""
    spot = snapshot.spot
    worst = 0.0
    for k in np.linspace(0.8, 1.2, 5) * spot:
        for shift in (0.05, 0.15, 0.3):
            up, down = spot * (1 + shift), spot * (1 - shift)
            for kind_in, kind_out, kind_v, level in (
                (OptionKind.UP_IN_CALL, OptionKind.UP_OUT_CALL, OptionKind.VANILLA_CALL, up),
                (OptionKind.DOWN_IN_PUT, OptionKind.DOWN_OUT_PUT, OptionKind.VANILLA_PUT, down),
            ):
                key = "upper_barrier" if level > spot else "lower_barrier"
                ki = OptionSpec(kind=kind_in, tau=tau, strike=float(k), **{key: level})
                ko = OptionSpec(kind=kind_out, tau=tau, strike=float(k), **{key: level})
                vanilla = OptionSpec(kind=kind_v, tau=tau, strike=float(k))
                gap = (
                    bs_price(ki, sigma, snapshot)[0]
                    + bs_price(ko, sigma, snapshot)[0]
                    - bs_price(vanilla, sigma, snapshot)[0]
                )
                worst = max(worst, abs(gap))
            ot = OptionSpec(kind=OptionKind.ONE_TOUCH, tau=tau, upper_barrier=up)
            nt = OptionSpec(kind=OptionKind.NO_TOUCH, tau=tau, upper_barrier=up)
            gap = (
                bs_price(ot, sigma, snapshot)[0]
                + bs_price(nt, sigma, snapshot)[0]
                - math.exp(-snapshot.r_d * tau)
            )
            worst = max(worst, abs(gap))
    return VerifyCheck(
        name="replication",
        passed=worst <= 1e-10,
        model_value=worst,
        oracle_value=0.0,
        tolerance=1e-10,
    )


def check_weights(snapshot: MarketSnapshot, sigma: float, tau: float) -> VerifyCheck:
    """Closed-form pillar weights against the 3x3 Greek-matching system."""
    spot = snapshot.spot
    pillars = (0.9 * spot, spot, 1.12 * spot)

    def vector(k: float) -> np.ndarray:
        g = greeks(OptionSide.CALL, spot, k, sigma, tau, snapshot.r_d, snapshot.r_f)
        return np.array(g.vector)

    legs = np.column_stack([vector(k) for k in pillars])
    worst = 0.0
    for k in np.linspace(0.75, 1.3, 100) * spot:
        exact = np.linalg.solve(legs, vector(float(k)))
        closed = np.array(closed_form_weights(float(k), pillars, sigma, tau, snapshot))
        worst = max(worst, float(np.max(np.abs(exact - closed))))
    return VerifyCheck(
        name="weights",
        passed=worst <= 1e-10,
        model_value=worst,
        oracle_value=0.0,
        tolerance=1e-10,
    )


# ──────────────────────────────────────────────
# Oracle checks
# ──────────────────────────────────────────────


def _drift(snapshot: MarketSnapshot) -> float:
    return snapshot.r_d - snapshot.r_f


def check_fet(
    snapshot: MarketSnapshot, sigma: float, tau: float, cfg: McConfig, level: float
) -> VerifyCheck:
    spec = OptionSpec(kind=OptionKind.NO_TOUCH, tau=tau, upper_barrier=level)
    model = fet_solve(spec, sigma, snapshot)
    mu_d = _drift(snapshot)
    mc_d = mc_first_exit(None, level, mu_d, sigma, snapshot.spot, tau, cfg)
    mc_f = mc_first_exit(None, level, mu_d + sigma * sigma, sigma, snapshot.spot, tau, cfg)
    estimate = 0.5 * (mc_d.fet + mc_f.fet)
    se = 0.5 * math.hypot(mc_d.fet_se, mc_f.fet_se)
    return _oracle_check(f"fet@{level:.4f}", model.gamma, estimate, se, rel=0.01)


def check_survival(
    snapshot: MarketSnapshot, sigma: float, tau: float, cfg: McConfig, level: float
) -> VerifyCheck:
    spec = OptionSpec(kind=OptionKind.NO_TOUCH, tau=tau, upper_barrier=level)
    model = survival_probability(spec, sigma, snapshot)
    mu_d = _drift(snapshot)
    mc_d = mc_first_exit(None, level, mu_d, sigma, snapshot.spot, tau, cfg)
    mc_f = mc_first_exit(None, level, mu_d + sigma * sigma, sigma, snapshot.spot, tau, cfg)
    estimate = 1.0 - 0.5 * (mc_d.touch + mc_f.touch)
    se = 0.5 * math.hypot(mc_d.touch_se, mc_f.touch_se)
    return _oracle_check(f"surv@{level:.4f}", model.gamma, estimate, se)


def check_price(
    snapshot: MarketSnapshot, sigma: float, cfg: McConfig, spec: OptionSpec
) -> VerifyCheck:
    model, _ = bs_price(spec, sigma, snapshot)
    oracle = mc_price(spec, sigma, snapshot, cfg)
    name = f"{spec.kind}@{spec.lower_barrier or '-'}/{spec.upper_barrier or '-'}"
    return _oracle_check(name, model, oracle.estimate, oracle.std_error)


def checks_for(
    snapshot: MarketSnapshot | None = None, cfg: McConfig | None = None
) -> list[Callable[[], VerifyCheck]]:
    """Every check as a zero-argument callable, in report order."""
    market, sigma, tau = _market(snapshot)
    mc_cfg = cfg or default_config()
    spot = market.spot
    checks: list[Callable[[], VerifyCheck]] = [
        lambda: check_replication(market, sigma, tau),
        lambda: check_weights(market, sigma, tau),
    ]
    for level in np.linspace(1.05, 1.5, 4) * spot:
        checks.append(lambda lv=float(level): check_fet(market, sigma, tau, mc_cfg, lv))
        checks.append(lambda lv=float(level): check_survival(market, sigma, tau, mc_cfg, lv))

    vanilla = OptionSpec(kind=OptionKind.VANILLA_CALL, tau=tau, strike=spot)
    checks.append(lambda: check_price(market, sigma, mc_cfg, vanilla))
    for lo, hi in ((0.8, 1.2), (0.7, 1.4)):
        for kind in (OptionKind.DKO_CALL, OptionKind.DKO_PUT):
            dko = OptionSpec(
                kind=kind, tau=tau, strike=spot, lower_barrier=lo * spot, upper_barrier=hi * spot
            )
            checks.append(lambda s=dko: check_price(market, sigma, mc_cfg, s))
        dnt = OptionSpec(
            kind=OptionKind.DOUBLE_NO_TOUCH,
            tau=tau,
            lower_barrier=lo * spot,
            upper_barrier=hi * spot,
        )
        checks.append(lambda s=dnt: check_price(market, sigma, mc_cfg, s))
    return checks


def run_checks(
    snapshot: MarketSnapshot | None = None, cfg: McConfig | None = None
) -> list[VerifyCheck]:
    """Run every check in parallel; the report keeps the declared order."""
    checks = checks_for(snapshot, cfg)
    results: dict[int, VerifyCheck] = {}
    with cf.ThreadPoolExecutor(max_workers=settings.threads) as executor:
        futures = {executor.submit(check): i for i, check in enumerate(checks)}
        for future in cf.as_completed(futures):
            results[futures[future]] = future.result()

    report = [results[i] for i in range(len(checks))]
    failed = [c.name for c in report if not c.passed]
    if failed:
        logger.warning("{} of {} checks failed: {}", len(failed), len(report), ", ".join(failed))
    else:
        logger.info("All {} checks passed", len(report))
    return report
