"""
All data models in one place. No business logic except computed properties and validation.
"""

from datetime import UTC, date, datetime
from enum import StrEnum
from typing import Literal

from pydantic import BaseModel, Field, model_validator

# ──────────────────────────────────────────────
# Error Models
# ──────────────────────────────────────────────


class ErrorSeverity(StrEnum):
    RECOVERABLE = "recoverable"
    DEGRADED = "degraded"
    FATAL = "fatal"


class PricingIssue(BaseModel):
    code: str
    message: str
    severity: ErrorSeverity
    source: str
    context: dict = {}
    timestamp: datetime = Field(default_factory=lambda: datetime.now(UTC))
    recovered: bool = True


class IssueSummary(BaseModel):
    component: str
    count: int
    sample: str
    severity: str


# ──────────────────────────────────────────────
# Market Conventions
# ──────────────────────────────────────────────


class OptionSide(StrEnum):
    CALL = "call"
    PUT = "put"


class DeltaStyle(StrEnum):
    SPOT = "spot"
    FORWARD = "forward"


class PremiumStyle(StrEnum):
    EXCLUDED = "excluded"
    INCLUDED = "included"


class AtmStyle(StrEnum):
    DN_EXCLUDED = "delta_neutral_excluded"
    DN_INCLUDED = "delta_neutral_included"
    FORWARD = "forward"


class Conventions(BaseModel):
    model_config = {"frozen": True}

    delta_style: DeltaStyle = DeltaStyle.SPOT
    premium_style: PremiumStyle = PremiumStyle.EXCLUDED
    atm_style: AtmStyle = AtmStyle.DN_EXCLUDED

    @model_validator(mode="after")
    def _atm_matches_premium(self) -> "Conventions":
        expected = {
            PremiumStyle.EXCLUDED: AtmStyle.DN_EXCLUDED,
            PremiumStyle.INCLUDED: AtmStyle.DN_INCLUDED,
        }[self.premium_style]
        if self.atm_style not in (expected, AtmStyle.FORWARD):
            raise ValueError(
                f"atm_style {self.atm_style} does not match premium_style {self.premium_style}"
            )
        return self


# ──────────────────────────────────────────────
# Market Data
# ──────────────────────────────────────────────


class BfKind(StrEnum):
    ONE_VOL = "one_vol"
    TWO_VOL = "two_vol"


class TenorQuote(BaseModel):
    model_config = {"frozen": True}

    tau: float = Field(gt=0, description="Year fraction, ACT/365")
    sigma_atm: float = Field(gt=0, description="ATM vol as a decimal (0.1685, not 16.85)")
    sigma_rr25: float = Field(description="25-delta risk reversal, call vol minus put vol")
    sigma_bf25: float = Field(description="25-delta butterfly, interpreted per bf_kind")
    bf_kind: BfKind = BfKind.TWO_VOL

    @model_validator(mode="after")
    def _pillars_positive(self) -> "TenorQuote":
        for sign in (1.0, -1.0):
            if self.sigma_atm + self.sigma_bf25 + sign * 0.5 * self.sigma_rr25 <= 0:
                raise ValueError("quote implies a non-positive 25-delta pillar vol")
        return self


class MarketSnapshot(BaseModel):
    model_config = {"frozen": True}

    pair: str = ""
    valuation_date: date = Field(default_factory=date.today)
    spot: float = Field(gt=0, description="Ccy2 per unit of Ccy1")
    r_d: float = Field(description="Continuously compounded domestic (Ccy2) rate")
    r_f: float = Field(description="Continuously compounded foreign (Ccy1) rate")
    conventions: Conventions = Conventions()
    quotes: list[TenorQuote] = []


class SnapshotFile(MarketSnapshot):
    schema_version: Literal[1] = 1


# ──────────────────────────────────────────────
# Smile
# ──────────────────────────────────────────────


class InterpolationRule(StrEnum):
    VANNA_VOLGA = "vanna_volga"
    QUADRATIC = "quadratic"


class SmileCurve(BaseModel):
    model_config = {"frozen": True}

    snapshot: MarketSnapshot
    conventions: Conventions
    tau: float = Field(gt=0)
    k_put: float = Field(gt=0)
    k_atm: float = Field(gt=0)
    k_call: float = Field(gt=0)
    sigma_put: float = Field(gt=0)
    sigma_atm: float = Field(gt=0)
    sigma_call: float = Field(gt=0)
    rule: InterpolationRule = InterpolationRule.VANNA_VOLGA
    quad_b: float = 0.0
    quad_c: float = 0.0

    @model_validator(mode="after")
    def _strikes_ordered(self) -> "SmileCurve":
        if not self.k_put < self.k_atm < self.k_call:
            raise ValueError(
                f"pillar strikes must satisfy K_p < K_ATM < K_c, got "
                f"{self.k_put}, {self.k_atm}, {self.k_call}"
            )
        return self

    @property
    def strikes(self) -> tuple[float, float, float]:
        return (self.k_put, self.k_atm, self.k_call)

    @property
    def vols(self) -> tuple[float, float, float]:
        return (self.sigma_put, self.sigma_atm, self.sigma_call)

    @property
    def is_flat(self) -> bool:
        return self.sigma_put == self.sigma_atm == self.sigma_call


class BrokerStrangle(BaseModel):
    bf1vol: float = Field(description="Single-vol butterfly spread over ATM")
    sigma: float = Field(description="Strangle vol, sigma_atm + bf1vol")
    k_put: float
    k_call: float


class ConventionAuditEntry(BaseModel):
    conventions: Conventions
    k_put: float
    k_call: float
    max_error: float = Field(description="Largest absolute strike miss against the targets")


class SmileReport(BaseModel):
    tau: float
    k_put: float
    k_atm: float
    k_call: float
    sigma_put: float
    sigma_atm: float
    sigma_call: float
    bf1vol: float
    k_put_broker: float
    k_call_broker: float
    vega_weighted_strangle: float
    grid: list[tuple[float, float]] = Field(description="(strike, vol) samples")


# ──────────────────────────────────────────────
# Instruments
# ──────────────────────────────────────────────


class OptionKind(StrEnum):
    VANILLA_CALL = "vanilla_call"
    VANILLA_PUT = "vanilla_put"
    UP_OUT_CALL = "up_out_call"
    DOWN_OUT_CALL = "down_out_call"
    UP_OUT_PUT = "up_out_put"
    DOWN_OUT_PUT = "down_out_put"
    UP_IN_CALL = "up_in_call"
    DOWN_IN_CALL = "down_in_call"
    UP_IN_PUT = "up_in_put"
    DOWN_IN_PUT = "down_in_put"
    DKO_CALL = "dko_call"
    DKO_PUT = "dko_put"
    DKI_CALL = "dki_call"
    DKI_PUT = "dki_put"
    KIKO_CALL = "kiko_call"
    KIKO_PUT = "kiko_put"
    ONE_TOUCH = "one_touch"
    NO_TOUCH = "no_touch"
    DOUBLE_ONE_TOUCH = "double_one_touch"
    DOUBLE_NO_TOUCH = "double_no_touch"
    CASH = "cash"


class BarrierSide(StrEnum):
    LOWER = "lower"
    UPPER = "upper"


UPPER_ONLY = frozenset(
    {
        OptionKind.UP_OUT_CALL,
        OptionKind.UP_OUT_PUT,
        OptionKind.UP_IN_CALL,
        OptionKind.UP_IN_PUT,
    }
)
LOWER_ONLY = frozenset(
    {
        OptionKind.DOWN_OUT_CALL,
        OptionKind.DOWN_OUT_PUT,
        OptionKind.DOWN_IN_CALL,
        OptionKind.DOWN_IN_PUT,
    }
)
DOUBLE = frozenset(
    {
        OptionKind.DKO_CALL,
        OptionKind.DKO_PUT,
        OptionKind.DKI_CALL,
        OptionKind.DKI_PUT,
        OptionKind.KIKO_CALL,
        OptionKind.KIKO_PUT,
        OptionKind.DOUBLE_ONE_TOUCH,
        OptionKind.DOUBLE_NO_TOUCH,
    }
)
TOUCH = frozenset(
    {
        OptionKind.ONE_TOUCH,
        OptionKind.NO_TOUCH,
        OptionKind.DOUBLE_ONE_TOUCH,
        OptionKind.DOUBLE_NO_TOUCH,
    }
)
STRIKELESS = TOUCH | {OptionKind.CASH}


class OptionSpec(BaseModel):
    model_config = {"frozen": True}

    kind: OptionKind
    tau: float = Field(gt=0, description="Year fraction to expiry, ACT/365")
    strike: float | None = Field(default=None, gt=0)
    lower_barrier: float | None = Field(default=None, gt=0)
    upper_barrier: float | None = Field(default=None, gt=0)
    knock_in: BarrierSide | None = Field(
        default=None, description="KIKO only: which of the two barriers knocks in"
    )
    notional: float = Field(default=1.0, gt=0, description="Domestic notional")

    @model_validator(mode="after")
    def _layout(self) -> "OptionSpec":
        kind = self.kind
        has_lower = self.lower_barrier is not None
        has_upper = self.upper_barrier is not None

        if (kind in STRIKELESS) == (self.strike is not None):
            raise ValueError(f"{kind} {'takes no' if kind in STRIKELESS else 'needs a'} strike")

        if kind in UPPER_ONLY and (has_lower or not has_upper):
            raise ValueError(f"{kind} needs exactly an upper barrier")
        if kind in LOWER_ONLY and (has_upper or not has_lower):
            raise ValueError(f"{kind} needs exactly a lower barrier")
        if kind in DOUBLE and not (has_lower and has_upper):
            raise ValueError(f"{kind} needs both barriers")
        if kind in (OptionKind.ONE_TOUCH, OptionKind.NO_TOUCH) and has_lower == has_upper:
            raise ValueError(f"{kind} needs exactly one barrier")
        if kind in (
            OptionKind.VANILLA_CALL,
            OptionKind.VANILLA_PUT,
            OptionKind.CASH,
        ) and (has_lower or has_upper):
            raise ValueError(f"{kind} takes no barrier")

        if has_lower and has_upper and not self.lower_barrier < self.upper_barrier:  # type: ignore[operator]
            raise ValueError("lower barrier must sit below the upper barrier")
        if kind in (OptionKind.KIKO_CALL, OptionKind.KIKO_PUT) and self.knock_in is None:
            raise ValueError(f"{kind} needs knock_in set to lower or upper")
        return self

    @property
    def side(self) -> OptionSide | None:
        if self.kind.value.endswith("_call"):
            return OptionSide.CALL
        if self.kind.value.endswith("_put"):
            return OptionSide.PUT
        return None

    @property
    def is_treasury(self) -> bool:
        """Strikeless products paying a fixed amount."""
        return self.kind in STRIKELESS


# ──────────────────────────────────────────────
# Vanna-Volga
# ──────────────────────────────────────────────


class GreeksTriple(BaseModel):
    model_config = {"frozen": True}

    vega: float = Field(description="dV/dsigma")
    vanna: float = Field(description="d2V/dS dsigma")
    volga: float = Field(description="d2V/dsigma2")

    @property
    def vector(self) -> tuple[float, float, float]:
        return (self.vega, self.vanna, self.volga)


class HedgeSet(BaseModel):
    model_config = {"frozen": True}

    sigma_atm: float
    k_atm: float
    k_call: float
    k_put: float
    atm: GreeksTriple = Field(description="Half ATM straddle")
    rr: GreeksTriple = Field(description="25-delta call minus 25-delta put")
    bf: GreeksTriple = Field(description="Half strangle minus half straddle")
    rr_cost: float = Field(description="Smile price minus sigma_atm price of the RR leg")
    bf_cost: float = Field(description="Smile price minus sigma_atm price of the BF leg")


class Variant(StrEnum):
    SURV = "surv"
    FET = "fet"


class VVParams(BaseModel):
    model_config = {"frozen": True}

    variant: Variant = Variant.FET
    a: float = 0.5
    b: float = 0.0
    c: float = 0.5
    gamma_star: float = Field(default=0.9, gt=0, lt=1)


class PricingFlag(StrEnum):
    KNOCKED = "knocked"
    CLAMPED_FLOOR = "clamped_floor"
    CLAMPED_VANILLA = "clamped_vanilla"
    CLAMPED_SINGLE_KO = "clamped_single_ko"
    SERIES_WARNING = "series_warning"
    GRID_WARNING = "grid_warning"


class ClampRule(StrEnum):
    FLOOR_ZERO = "floor_zero"
    KO_LE_VANILLA = "ko_le_vanilla"
    DKO_LE_KO1 = "dko_le_ko1"
    DKO_LE_KO2 = "dko_le_ko2"
    WKO_BOUNDS = "wko_bounds"


class ClampReport(BaseModel):
    original: float
    clamped: float
    applied_rules: list[ClampRule] = []


class ConstituentPrice(BaseModel):
    sign: int
    spec: OptionSpec
    bstv: float
    vv_price: float
    final_price: float
    gamma: float
    applied_rules: list[ClampRule] = []


class PricingResult(BaseModel):
    kind: OptionKind
    bstv: float = Field(description="Black-Scholes value at sigma_atm")
    vega_term: float = 0.0
    vanna_term: float = 0.0
    volga_term: float = 0.0
    p_vanna: float = 1.0
    p_volga: float = 1.0
    gamma: float = 1.0
    vv_price: float = Field(description="Attenuated price before arbitrage clamps")
    final_price: float
    notional: float = 1.0
    flags: list[PricingFlag] = []
    constituents: list[ConstituentPrice] = []
    issues: list[PricingIssue] = []

    @property
    def smile_value(self) -> float:
        return self.final_price - self.bstv

    @property
    def premium(self) -> float:
        return self.final_price * self.notional


# ──────────────────────────────────────────────
# Barrier Vicinity
# ──────────────────────────────────────────────


class PdeGrid(BaseModel):
    model_config = {"frozen": True}

    nodes: int = Field(default=400, ge=50)
    steps: int = Field(default=400, ge=50)
    rannacher_steps: int = Field(default=4, ge=0)
    far_stdevs: float = Field(default=8.0, gt=0)


class VicinityMeasure(BaseModel):
    gamma: float = Field(ge=0, le=1)
    domestic: float = Field(description="Normalized component under the domestic measure")
    foreign: float = Field(description="Normalized component under the foreign measure")
    variant: Variant
    flags: list[PricingFlag] = []


# ──────────────────────────────────────────────
# Calibration
# ──────────────────────────────────────────────


class FitConstraint(StrEnum):
    FREE = "free"
    CONFIG1 = "config1"  # b = c = a/2, survival
    CONFIG2 = "config2"  # b = c = a/2, FET
    CONFIG3 = "config3"  # a = c, b = 0, survival
    CONFIG4 = "config4"  # a = c, b = 0, FET


class QuotedInstrument(BaseModel):
    label: str = ""
    spec: OptionSpec
    prices: list[float] = Field(min_length=1, description="One mid price per provider")

    @property
    def mean(self) -> float:
        return sum(self.prices) / len(self.prices)

    @property
    def spread(self) -> float:
        return max(self.prices) - min(self.prices)


class QuoteSet(BaseModel):
    instruments: list[QuotedInstrument]


class QuotesFile(QuoteSet):
    schema_version: Literal[1] = 1


class FitConfig(BaseModel):
    constraint: FitConstraint = FitConstraint.CONFIG4
    variant: Variant = Field(default=Variant.FET, description="Only read by the free config")
    kinds: list[OptionKind] | None = Field(default=None, description="Instrument filter")
    gamma_star: float = Field(default=0.9, gt=0, lt=1)

    @property
    def effective_variant(self) -> Variant:
        return {
            FitConstraint.FREE: self.variant,
            FitConstraint.CONFIG1: Variant.SURV,
            FitConstraint.CONFIG2: Variant.FET,
            FitConstraint.CONFIG3: Variant.SURV,
            FitConstraint.CONFIG4: Variant.FET,
        }[self.constraint]


class FitResult(BaseModel):
    params: VVParams
    epsilon: float
    instrument_count: int
    constraint: FitConstraint


class ParamsFile(BaseModel):
    schema_version: Literal[1] = 1
    params: VVParams
    provenance: dict = {}


# ──────────────────────────────────────────────
# Monte Carlo Oracle
# ──────────────────────────────────────────────


class McConfig(BaseModel):
    model_config = {"frozen": True}

    paths: int = Field(default=1_000_000, ge=1)
    steps_per_year: int = Field(default=365, ge=1)
    seed: int = Field(default=20090108, ge=0)
    bridge_correction: bool = True
    antithetic: bool = False
    batch_size: int = Field(default=20_000, ge=1)


class McEstimate(BaseModel):
    estimate: float
    std_error: float
    paths: int


class FirstExitEstimate(BaseModel):
    fet: float = Field(description="Mean of min(first passage, tau) / tau")
    fet_se: float
    touch: float = Field(description="Fraction of paths touching a barrier")
    touch_se: float
    paths: int


class VerifyCheck(BaseModel):
    name: str
    passed: bool
    model_value: float
    oracle_value: float
    tolerance: float
    detail: str = ""


# ──────────────────────────────────────────────
# Sweeps
# ──────────────────────────────────────────────


class LadderSpec(BaseModel):
    side: BarrierSide = BarrierSide.UPPER
    levels: list[float] | None = None
    touch_probabilities: list[float] | None = None
    fixed_probability: float | None = Field(
        default=None,
        gt=0,
        lt=1,
        description="Double-barrier templates: touch probability of the other, fixed barrier",
    )

    @model_validator(mode="after")
    def _one_ladder(self) -> "LadderSpec":
        if (self.levels is None) == (self.touch_probabilities is None):
            raise ValueError("give exactly one of levels or touch_probabilities")
        values = self.levels if self.levels is not None else self.touch_probabilities
        assert values is not None
        if not values:
            raise ValueError("ladder is empty")
        steps = [b - a for a, b in zip(values, values[1:], strict=False)]
        if steps and not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            raise ValueError("ladder must be strictly monotone")
        if self.touch_probabilities is not None and not all(
            0 < p < 1 for p in self.touch_probabilities
        ):
            raise ValueError("touch probability targets must lie in (0, 1)")
        return self


class SweepSpec(BaseModel):
    schema_version: Literal[1] = 1
    template: OptionSpec
    ladder: LadderSpec
    variants: list[Variant] = [Variant.SURV, Variant.FET]


class SweepRow(BaseModel):
    index: int
    level: float | None = None
    touch_probability: float | None = None
    bstv: float | None = None
    modsv: dict[str, float] = {}
    error: str | None = None


# ──────────────────────────────────────────────
# API Request Models
# ──────────────────────────────────────────────


class PriceRequest(BaseModel):
    snapshot: MarketSnapshot
    instrument: OptionSpec
    params: VVParams | None = None


class SmileRequest(BaseModel):
    snapshot: MarketSnapshot
    tau: float = Field(gt=0)
    grid_points: int = Field(default=21, ge=3, le=401)


# ──────────────────────────────────────────────
# Base Exceptions
# ──────────────────────────────────────────────


class DomainError(ValueError):
    """Inputs outside the domain of an operation."""


class NumericalError(RuntimeError):
    """A solver or decomposition failed to produce a trustworthy number."""
