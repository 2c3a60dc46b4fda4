"""
Barrier-vicinity measures feeding the attenuation factors.

* survival: average of the no-touch probabilities under the domestic and foreign measures
* first exit time: expected min(first passage, tau) / tau under both measures, from the
  backward Kolmogorov equation solved on a log-spot grid
"""

import math

import numpy as np
from loguru import logger
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from vvfx.bs import no_touch_probability
from vvfx.config import settings
from vvfx.models import (
    MarketSnapshot,
    OptionSpec,
    PdeGrid,
    PricingFlag,
    Variant,
    VicinityMeasure,
)

# Smallest grid either the fine or the half-grid solve may use
MIN_GRID = 50


def _breached(spot: float, lower: float | None, upper: float | None) -> bool:
    return (lower is not None and spot <= lower) or (upper is not None and spot >= upper)


def _drifts(sigma: float, snapshot: MarketSnapshot) -> tuple[float, float]:
    """Spot drift under the domestic and the foreign measure."""
    mu_d = snapshot.r_d - snapshot.r_f
    return mu_d, mu_d + sigma * sigma


# ──────────────────────────────────────────────
# Survival probability
# ──────────────────────────────────────────────


def survival_probability(
    spec: OptionSpec, sigma_atm: float, snapshot: MarketSnapshot
) -> VicinityMeasure:
    lower, upper = spec.lower_barrier, spec.upper_barrier
    if lower is None and upper is None:
        return VicinityMeasure(gamma=1.0, domestic=1.0, foreign=1.0, variant=Variant.SURV)
    if _breached(snapshot.spot, lower, upper):
        return VicinityMeasure(
            gamma=0.0,
            domestic=0.0,
            foreign=0.0,
            variant=Variant.SURV,
            flags=[PricingFlag.KNOCKED],
        )

    flags: list[PricingFlag] = []
    probs = []
    for mu in _drifts(sigma_atm, snapshot):
        p, converged = no_touch_probability(snapshot.spot, lower, upper, sigma_atm, spec.tau, mu)
        probs.append(p)
        if not converged and PricingFlag.SERIES_WARNING not in flags:
            flags.append(PricingFlag.SERIES_WARNING)

    p_d, p_f = probs
    gamma = min(max(0.5 * (p_d + p_f), 0.0), 1.0)
    return VicinityMeasure(gamma=gamma, domestic=p_d, foreign=p_f, variant=Variant.SURV, flags=flags)


# ──────────────────────────────────────────────
# First exit time
# ──────────────────────────────────────────────


def _expected_exit(
    log_lower: float | None,
    log_upper: float | None,
    mu: float,
    sigma: float,
    tau: float,
    nodes: int,
    steps: int,
    grid: PdeGrid,
) -> float:
    """
    E[min(first passage, tau)] from log-spot 0.

    u(x, theta) with theta the time to go: u = tau at theta = 0, u = tau - theta on a
    barrier and zero convexity on a far edge. Returns u(0, tau).
    """
    far = grid.far_stdevs * sigma * math.sqrt(tau)
    lower_absorbs = log_lower is not None and log_lower > -far
    upper_absorbs = log_upper is not None and log_upper < far
    x_lo = log_lower if lower_absorbs else -far
    x_hi = log_upper if upper_absorbs else far
    assert x_lo is not None and x_hi is not None

    x = np.linspace(x_lo, x_hi, nodes + 1)
    h = x[1] - x[0]
    dt = tau / steps
    nu = mu - 0.5 * sigma * sigma
    a = 0.5 * sigma * sigma / (h * h)
    b = nu / (2.0 * h)
    sub, diag, sup = a - b, -2.0 * a, a + b
    n = nodes + 1

    def system(theta: float) -> np.ndarray:
        """Banded form (2, 2) of I - theta * dt * L with boundary rows."""
        ab = np.zeros((5, n))
        ab[2, 1:-1] = 1.0 - theta * dt * diag
        ab[1, 2:] = -theta * dt * sup
        ab[3, :-2] = -theta * dt * sub
        if lower_absorbs:
            ab[2, 0] = 1.0
        else:
            ab[2, 0], ab[1, 1], ab[0, 2] = 1.0, -2.0, 1.0
        if upper_absorbs:
            ab[2, -1] = 1.0
        else:
            ab[2, -1], ab[3, -2], ab[4, -3] = 1.0, -2.0, 1.0
        return ab

    implicit, crank = system(1.0), system(0.5)
    u = np.full(n, tau)
    for step in range(1, steps + 1):
        theta = 1.0 if step <= grid.rannacher_steps else 0.5
        ab = implicit if theta == 1.0 else crank
        rhs = u.copy()
        explicit = (1.0 - theta) * dt
        if explicit:
            rhs[1:-1] += explicit * (sub * u[:-2] + diag * u[1:-1] + sup * u[2:])
        boundary = tau - step * dt
        rhs[0] = boundary if lower_absorbs else 0.0
        rhs[-1] = boundary if upper_absorbs else 0.0
        u = solve_banded((2, 2), ab, rhs)

    return float(CubicSpline(x, u)(0.0))


def _deterministic_exit(
    log_lower: float | None, log_upper: float | None, mu: float, tau: float
) -> float:
    """Exit time of the drift path when there is no diffusion."""
    if mu > 0 and log_upper is not None:
        return min(log_upper / mu, tau)
    if mu < 0 and log_lower is not None:
        return min(log_lower / mu, tau)
    return tau


def fet_solve(
    spec: OptionSpec,
    sigma_atm: float,
    snapshot: MarketSnapshot,
    grid: PdeGrid | None = None,
) -> VicinityMeasure:
    """Normalized expected first exit time under both measures, flagged when the grid is too coarse."""
    grid = grid or PdeGrid(
        nodes=settings.pde_nodes,
        steps=settings.pde_steps,
        rannacher_steps=settings.pde_rannacher_steps,
        far_stdevs=settings.pde_far_stdevs,
    )
    lower, upper = spec.lower_barrier, spec.upper_barrier
    tau = spec.tau
    if lower is None and upper is None:
        return VicinityMeasure(gamma=1.0, domestic=1.0, foreign=1.0, variant=Variant.FET)
    if _breached(snapshot.spot, lower, upper):
        return VicinityMeasure(
            gamma=0.0,
            domestic=0.0,
            foreign=0.0,
            variant=Variant.FET,
            flags=[PricingFlag.KNOCKED],
        )

    log_lower = math.log(lower / snapshot.spot) if lower is not None else None
    log_upper = math.log(upper / snapshot.spot) if upper is not None else None
    flags: list[PricingFlag] = []
    values = []
    for mu in _drifts(sigma_atm, snapshot):
        if sigma_atm * math.sqrt(tau) < settings.degenerate_stdev:
            values.append(_deterministic_exit(log_lower, log_upper, mu, tau) / tau)
            continue
        fine = _expected_exit(
            log_lower, log_upper, mu, sigma_atm, tau, grid.nodes, grid.steps, grid
        )
        coarse = _expected_exit(
            log_lower,
            log_upper,
            mu,
            sigma_atm,
            tau,
            max(grid.nodes // 2, MIN_GRID),
            max(grid.steps // 2, MIN_GRID),
            grid,
        )
        if abs(fine - coarse) / tau > settings.pde_richardson_tol:
            logger.warning(
                "FET grid check failed: fine {:.6f} vs coarse {:.6f} (mu={})", fine, coarse, mu
            )
            if PricingFlag.GRID_WARNING not in flags:
                flags.append(PricingFlag.GRID_WARNING)
        values.append(min(max(fine / tau, 0.0), 1.0))

    lam_d, lam_f = values
    return VicinityMeasure(
        gamma=0.5 * (lam_d + lam_f),
        domestic=lam_d,
        foreign=lam_f,
        variant=Variant.FET,
        flags=flags,
    )


def vicinity(
    spec: OptionSpec,
    sigma_atm: float,
    snapshot: MarketSnapshot,
    variant: Variant,
    grid: PdeGrid | None = None,
) -> VicinityMeasure:
    if variant == Variant.SURV:
        return survival_probability(spec, sigma_atm, snapshot)
    return fet_solve(spec, sigma_atm, snapshot, grid)
