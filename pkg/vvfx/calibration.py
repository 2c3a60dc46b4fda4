"""
Calibration of the attenuation coefficients to quoted prices.

For a fixed vicinity measure the unclamped VV price is affine in (a, b, c):

    price = bstv + offset + a * F_a + b * F_b + c * F_c

so every configuration is a weighted linear least-squares problem with weights
1 / spread^2, which is exactly the error measure below.
"""

import concurrent.futures as cf

import numpy as np
from loguru import logger

from vvfx.arbitrage import decompose
from vvfx.config import settings
from vvfx.exit_metrics import vicinity
from vvfx.models import (
    DomainError,
    FitConfig,
    FitConstraint,
    FitResult,
    MarketSnapshot,
    NumericalError,
    OptionSpec,
    QuotedInstrument,
    QuoteSet,
    Variant,
    VVParams,
)
from vvfx.pricing import curve_for, hedge_set_for
from vvfx.vanna_volga import attenuation_basis, vv_price

# Columns of a feature row
BSTV, OFFSET, F_A, F_B, F_C = range(5)


# ──────────────────────────────────────────────
# Smile values and the error measure
# ──────────────────────────────────────────────


def smile_values(
    model_prices: list[float], market_prices: list[float], bstv: list[float]
) -> tuple[list[float], list[float]]:
    """(MODSV, MKTSV): model and market price minus the flat-vol value."""
    if not len(model_prices) == len(market_prices) == len(bstv):
        raise DomainError(
            f"misaligned inputs: {len(model_prices)} model, {len(market_prices)} market, "
            f"{len(bstv)} bstv"
        )
    modsv = [m - b for m, b in zip(model_prices, bstv, strict=True)]
    mktsv = [m - b for m, b in zip(market_prices, bstv, strict=True)]
    return modsv, mktsv


def _weighted(quotes: QuoteSet) -> list[int]:
    """Indices of instruments entering the error; single-provider quotes have no spread."""
    used = []
    for i, inst in enumerate(quotes.instruments):
        if len(inst.prices) < 2:
            continue
        if inst.spread <= 0:
            raise QuoteConfigurationError(
                f"instrument {inst.label or i} has zero spread across {len(inst.prices)} providers"
            )
        used.append(i)
    return used


def error(quotes: QuoteSet, model_prices: list[float]) -> float:
    """Sum of squared model-minus-mean deviations in units of each provider spread."""
    if len(model_prices) != len(quotes.instruments):
        raise DomainError(
            f"{len(model_prices)} model prices for {len(quotes.instruments)} instruments"
        )
    total = 0.0
    for i in _weighted(quotes):
        inst = quotes.instruments[i]
        total += ((model_prices[i] - inst.mean) / inst.spread) ** 2
    return total


# ──────────────────────────────────────────────
# Features
# ──────────────────────────────────────────────


def _features_one(
    spec: OptionSpec, snapshot: MarketSnapshot, variant: Variant, gamma_star: float
) -> np.ndarray:
    curve = curve_for(snapshot, spec.tau)
    hedges = hedge_set_for(curve)
    row = np.zeros(5)
    # any coefficients will do: the correction terms do not depend on them
    basis_params = VVParams(variant=variant, gamma_star=gamma_star)
    for sign, leg in decompose(spec):
        gamma = vicinity(leg, curve.sigma_atm, snapshot, variant).gamma
        raw = vv_price(leg, curve, basis_params, gamma, hedges)
        (u_a, s_a), (u_v, s_b, s_c) = attenuation_basis(gamma, gamma_star, leg.is_treasury)
        row[BSTV] += sign * raw.bstv
        row[OFFSET] += sign * (u_a * raw.vanna_term + u_v * raw.volga_term)
        row[F_A] += sign * s_a * raw.vanna_term
        row[F_B] += sign * s_b * raw.volga_term
        row[F_C] += sign * s_c * raw.volga_term
    return row


def correction_features(
    specs: list[OptionSpec],
    snapshot: MarketSnapshot,
    variant: Variant,
    gamma_star: float,
) -> np.ndarray:
    """One row (bstv, offset, F_a, F_b, F_c) per instrument, evaluated in parallel."""
    rows: dict[int, np.ndarray] = {}
    with cf.ThreadPoolExecutor(max_workers=settings.threads) as executor:
        futures = {
            executor.submit(_features_one, spec, snapshot, variant, gamma_star): i
            for i, spec in enumerate(specs)
        }
        for future in cf.as_completed(futures):
            rows[futures[future]] = future.result()
    return np.array([rows[i] for i in range(len(specs))]).reshape(len(specs), 5)


def model_prices(features: np.ndarray, params: VVParams) -> np.ndarray:
    """Unclamped VV prices implied by the features."""
    return (
        features[:, BSTV]
        + features[:, OFFSET]
        + params.a * features[:, F_A]
        + params.b * features[:, F_B]
        + params.c * features[:, F_C]
    )


# ──────────────────────────────────────────────
# Fit
# ──────────────────────────────────────────────


def _design(features: np.ndarray, constraint: FitConstraint) -> np.ndarray:
    f_a, f_b, f_c = features[:, F_A], features[:, F_B], features[:, F_C]
    if constraint == FitConstraint.FREE:
        return np.column_stack([f_a, f_b, f_c])
    if constraint in (FitConstraint.CONFIG1, FitConstraint.CONFIG2):
        return (f_a + 0.5 * f_b + 0.5 * f_c).reshape(-1, 1)
    return (f_a + f_c).reshape(-1, 1)


def _params_from(theta: np.ndarray, config: FitConfig) -> VVParams:
    variant = config.effective_variant
    if config.constraint == FitConstraint.FREE:
        a, b, c = (float(v) for v in theta)
    elif config.constraint in (FitConstraint.CONFIG1, FitConstraint.CONFIG2):
        a = float(theta[0])
        b = c = 0.5 * a
    else:
        a = c = float(theta[0])
        b = 0.0
    return VVParams(variant=variant, a=a, b=b, c=c, gamma_star=config.gamma_star)


def _filtered(quotes: QuoteSet, config: FitConfig) -> QuoteSet:
    if config.kinds is None:
        return quotes
    kept = [q for q in quotes.instruments if q.spec.kind in config.kinds]
    return QuoteSet(instruments=kept)


def fit(quotes: QuoteSet, config: FitConfig, snapshot: MarketSnapshot) -> FitResult:
    """Weighted least squares through the normal equations under the configured constraint."""
    quotes = _filtered(quotes, config)
    if not quotes.instruments:
        raise QuoteConfigurationError("no instruments left after applying the kind filter")
    used = _weighted(quotes)
    if not used:
        raise QuoteConfigurationError("every instrument has a single provider; nothing to fit")

    variant = config.effective_variant
    features = correction_features(
        [q.spec for q in quotes.instruments], snapshot, variant, config.gamma_star
    )
    sub = features[used]
    design = _design(sub, config.constraint)
    spreads = np.array([quotes.instruments[i].spread for i in used])
    means = np.array([quotes.instruments[i].mean for i in used])
    target = means - sub[:, BSTV] - sub[:, OFFSET]
    weights = 1.0 / spreads**2

    scaled = design * np.sqrt(weights)[:, None]
    k = design.shape[1]
    rank = int(np.linalg.matrix_rank(scaled))
    if rank < k:
        raise RankDeficientError(
            rank=rank,
            parameters=k,
            instruments=len(used),
            singular_values=np.linalg.svd(scaled, compute_uv=False).tolist(),
        )

    normal = design.T @ (weights[:, None] * design)
    rhs = design.T @ (weights * target)
    cond = np.linalg.cond(normal)
    if cond > settings.hedge_cond_max:
        logger.warning("Normal equations ill-conditioned ({:.3e}), adding Tikhonov term", cond)
        normal = normal + settings.tikhonov_lambda * np.eye(k)
    theta = np.linalg.solve(normal, rhs)

    params = _params_from(theta, config)
    epsilon = error(quotes, model_prices(features, params).tolist())
    logger.info(
        "Fitted {} on {} instruments: a={:.6f} b={:.6f} c={:.6f} eps={:.3e}",
        config.constraint,
        len(used),
        params.a,
        params.b,
        params.c,
        epsilon,
    )
    return FitResult(
        params=params, epsilon=epsilon, instrument_count=len(used), constraint=config.constraint
    )


def synthetic_quotes(
    specs: list[OptionSpec],
    snapshot: MarketSnapshot,
    params: VVParams,
    spread: float = 1e-4,
    labels: list[str] | None = None,
) -> QuoteSet:
    """Three provider quotes centred on the model price, spread apart by `spread`."""
    features = correction_features(specs, snapshot, params.variant, params.gamma_star)
    prices = model_prices(features, params)
    labels = labels or [f"{s.kind}-{i}" for i, s in enumerate(specs)]
    return QuoteSet(
        instruments=[
            QuotedInstrument(
                label=label,
                spec=spec,
                prices=[float(p) - 0.5 * spread, float(p), float(p) + 0.5 * spread],
            )
            for label, spec, p in zip(labels, specs, prices, strict=True)
        ]
    )


# ──────────────────────────────────────────────
# Custom Exceptions
# ──────────────────────────────────────────────


class CalibrationError(NumericalError):
    """Base of every fit failure; catch this to handle all of them."""


class RankDeficientError(CalibrationError):
    def __init__(
        self, rank: int, parameters: int, instruments: int, singular_values: list[float]
    ):
        self.rank = rank
        self.parameters = parameters
        self.instruments = instruments
        self.singular_values = singular_values
        super().__init__(
            f"regression has rank {rank} < {parameters} parameters over {instruments} "
            f"instruments (singular values {singular_values})"
        )


class QuoteConfigurationError(DomainError):
    pass
