"""
Monte Carlo oracle for the closed forms and the barrier-vicinity measures.

Exact GBM steps on a daily grid, continuous monitoring recovered with Brownian-bridge
survival weights, path batches seeded from spawned SeedSequences and run in a thread
pool. Partial sums are reduced in batch order, so an estimate depends only on the
config, never on the thread count.
"""

import concurrent.futures as cf
import math
from collections.abc import Callable

import numpy as np
from loguru import logger

from vvfx.config import settings
from vvfx.models import (
    BarrierSide,
    FirstExitEstimate,
    MarketSnapshot,
    McConfig,
    McEstimate,
    OptionKind,
    OptionSpec,
)

_OUT_KINDS = {
    OptionKind.UP_OUT_CALL,
    OptionKind.UP_OUT_PUT,
    OptionKind.DOWN_OUT_CALL,
    OptionKind.DOWN_OUT_PUT,
    OptionKind.DKO_CALL,
    OptionKind.DKO_PUT,
}
_IN_KINDS = {
    OptionKind.UP_IN_CALL,
    OptionKind.UP_IN_PUT,
    OptionKind.DOWN_IN_CALL,
    OptionKind.DOWN_IN_PUT,
    OptionKind.DKI_CALL,
    OptionKind.DKI_PUT,
}


def default_config() -> McConfig:
    return McConfig(
        paths=settings.mc_paths,
        steps_per_year=settings.mc_steps_per_year,
        seed=settings.mc_seed,
        batch_size=settings.mc_batch_size,
    )


# ──────────────────────────────────────────────
# Path engine
# ──────────────────────────────────────────────


def _bridge_step(
    weight: np.ndarray,
    x0: np.ndarray,
    x1: np.ndarray,
    barrier: float,
    below: bool,
    variance: float,
    bridge: bool,
) -> None:
    """Multiply in the probability of not touching the barrier between two log-spots."""
    inside = x1 > barrier if below else x1 < barrier
    weight[~inside] = 0.0
    if bridge and variance > 0:
        d0 = barrier - x0
        d1 = barrier - x1
        crossing = np.exp(np.minimum(-2.0 * d0 * d1 / variance, 0.0))
        weight[inside] *= 1.0 - crossing[inside]


def _simulate(
    normals: np.ndarray,
    mu: float,
    sigma: float,
    dt: float,
    log_lower: float | None,
    log_upper: float | None,
    bridge: bool,
    track_time: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Walk one batch of paths through the (steps, paths) normal draws.

    Returns (terminal log-spot, lower survival, upper survival, integrated survival time).
    """
    steps, paths = normals.shape
    drift = (mu - 0.5 * sigma * sigma) * dt
    vol = sigma * math.sqrt(dt)
    variance = vol * vol

    x = np.zeros(paths)
    w_lower = np.ones(paths)
    w_upper = np.ones(paths)
    alive_time = np.zeros(paths)
    for i in range(steps):
        x_next = x + drift + vol * normals[i]
        before = w_lower * w_upper if track_time else None
        if log_lower is not None:
            _bridge_step(w_lower, x, x_next, log_lower, True, variance, bridge)
        if log_upper is not None:
            _bridge_step(w_upper, x, x_next, log_upper, False, variance, bridge)
        if track_time:
            alive_time += 0.5 * dt * (before + w_lower * w_upper)
        x = x_next
    return x, w_lower, w_upper, alive_time


def _draw(rng: np.random.Generator, steps: int, paths: int, antithetic: bool) -> np.ndarray:
    if not antithetic:
        return rng.standard_normal((steps, paths))
    half = rng.standard_normal((steps, paths // 2))
    return np.concatenate([half, -half], axis=1)


def _batch_sizes(cfg: McConfig) -> list[int]:
    full, rest = divmod(cfg.paths, cfg.batch_size)
    sizes = [cfg.batch_size] * full + ([rest] if rest else [])
    if cfg.antithetic:
        sizes = [max(2, s - s % 2) for s in sizes]
    return sizes


def _run_batches(
    cfg: McConfig, batch: Callable[[np.random.Generator, int], np.ndarray]
) -> np.ndarray:
    """
    Fan batches out over the thread pool and reduce their moment rows in batch order.

    Each batch returns one (sum, sum of squares, count) row per estimated quantity.
    """
    sizes = _batch_sizes(cfg)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    results: dict[int, np.ndarray] = {}

    with cf.ThreadPoolExecutor(max_workers=settings.threads) as executor:
        futures = {
            executor.submit(batch, np.random.default_rng(seed), size): i
            for i, (seed, size) in enumerate(zip(seeds, sizes, strict=True))
        }
        for future in cf.as_completed(futures):
            results[futures[future]] = future.result()

    reduced = np.zeros_like(results[0])
    for i in range(len(sizes)):
        reduced += results[i]
    return reduced


def _moments(samples: np.ndarray, antithetic: bool) -> np.ndarray:
    if antithetic:
        half = samples.size // 2
        samples = 0.5 * (samples[:half] + samples[half:])
    return np.array([samples.sum(), np.square(samples).sum(), samples.size], dtype=float)


def _mean_and_error(row: np.ndarray) -> tuple[float, float]:
    total, total_sq, count = float(row[0]), float(row[1]), int(row[2])
    mean = total / count
    if count < 2:
        return mean, 0.0
    variance = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
    return mean, math.sqrt(variance / count)


# ──────────────────────────────────────────────
# Pricing oracle
# ──────────────────────────────────────────────


def _payoff(
    spec: OptionSpec, spot_t: np.ndarray, w_lower: np.ndarray, w_upper: np.ndarray
) -> np.ndarray:
    kind = spec.kind
    alive = w_lower * w_upper
    if kind == OptionKind.CASH:
        return np.ones_like(spot_t)
    if kind == OptionKind.NO_TOUCH or kind == OptionKind.DOUBLE_NO_TOUCH:
        return alive
    if kind == OptionKind.ONE_TOUCH or kind == OptionKind.DOUBLE_ONE_TOUCH:
        return 1.0 - alive

    assert spec.strike is not None
    omega = 1.0 if kind.value.endswith("_call") else -1.0
    vanilla = np.maximum(omega * (spot_t - spec.strike), 0.0)
    if kind in (OptionKind.VANILLA_CALL, OptionKind.VANILLA_PUT):
        return vanilla
    if kind in _OUT_KINDS:
        return vanilla * alive
    if kind in _IN_KINDS:
        return vanilla * (1.0 - alive)
    # KIKO: touched the knock-in barrier, never the knock-out barrier
    w_in, w_out = (w_lower, w_upper) if spec.knock_in == BarrierSide.LOWER else (w_upper, w_lower)
    return vanilla * w_out * (1.0 - w_in)


def _log_barriers(
    spot: float, lower: float | None, upper: float | None
) -> tuple[float | None, float | None]:
    log_lower = math.log(lower / spot) if lower is not None else None
    log_upper = math.log(upper / spot) if upper is not None else None
    return log_lower, log_upper


def mc_price(
    spec: OptionSpec,
    sigma: float,
    snapshot: MarketSnapshot,
    cfg: McConfig | None = None,
) -> McEstimate:
    """Discounted mean payoff under the domestic measure, with its standard error."""
    cfg = cfg or default_config()
    tau = spec.tau
    steps = max(1, math.ceil(cfg.steps_per_year * tau))
    dt = tau / steps
    spot = snapshot.spot
    mu = snapshot.r_d - snapshot.r_f
    log_lower, log_upper = _log_barriers(spot, spec.lower_barrier, spec.upper_barrier)

    def batch(rng: np.random.Generator, size: int) -> np.ndarray:
        normals = _draw(rng, steps, size, cfg.antithetic)
        x, w_lower, w_upper, _ = _simulate(
            normals, mu, sigma, dt, log_lower, log_upper, cfg.bridge_correction
        )
        # knocked before the first step
        if log_lower is not None and log_lower >= 0:
            w_lower[:] = 0.0
        if log_upper is not None and log_upper <= 0:
            w_upper[:] = 0.0
        return _moments(_payoff(spec, spot * np.exp(x), w_lower, w_upper), cfg.antithetic)

    row = _run_batches(cfg, batch)
    mean, se = _mean_and_error(row)
    df_d = math.exp(-snapshot.r_d * tau)
    paths = int(row[2]) * (2 if cfg.antithetic else 1)
    logger.info("MC {} over {} paths: {:.8f} +- {:.2e}", spec.kind, paths, df_d * mean, df_d * se)
    return McEstimate(estimate=df_d * mean, std_error=df_d * se, paths=paths)


# ──────────────────────────────────────────────
# First exit oracle
# ──────────────────────────────────────────────


def mc_first_exit(
    lower: float | None,
    upper: float | None,
    mu: float,
    sigma: float,
    spot: float,
    tau: float,
    cfg: McConfig | None = None,
) -> FirstExitEstimate:
    """Mean of min(first passage, tau) / tau and the touch frequency, with standard errors."""
    cfg = cfg or default_config()
    if lower is None and upper is None:
        return FirstExitEstimate(fet=1.0, fet_se=0.0, touch=0.0, touch_se=0.0, paths=cfg.paths)
    if (lower is not None and spot <= lower) or (upper is not None and spot >= upper):
        return FirstExitEstimate(fet=0.0, fet_se=0.0, touch=1.0, touch_se=0.0, paths=cfg.paths)

    steps = max(1, math.ceil(cfg.steps_per_year * tau))
    dt = tau / steps
    log_lower, log_upper = _log_barriers(spot, lower, upper)

    def batch(rng: np.random.Generator, size: int) -> np.ndarray:
        normals = _draw(rng, steps, size, cfg.antithetic)
        _, w_lower, w_upper, alive_time = _simulate(
            normals, mu, sigma, dt, log_lower, log_upper, cfg.bridge_correction, track_time=True
        )
        return np.stack(
            [
                _moments(alive_time / tau, cfg.antithetic),
                _moments(1.0 - w_lower * w_upper, cfg.antithetic),
            ]
        )

    rows = _run_batches(cfg, batch)
    fet, fet_se = _mean_and_error(rows[0])
    touch, touch_se = _mean_and_error(rows[1])
    paths = int(rows[1][2]) * (2 if cfg.antithetic else 1)
    logger.info("MC first exit over {} paths: fet {:.6f}, touch {:.6f}", paths, fet, touch)
    return FirstExitEstimate(fet=fet, fet_se=fet_se, touch=touch, touch_se=touch_se, paths=paths)
