"""Unit tests for data model validation."""

import pytest
from pydantic import ValidationError

from vvfx.models import (
    AtmStyle,
    BarrierSide,
    Conventions,
    FitConfig,
    FitConstraint,
    LadderSpec,
    OptionKind,
    OptionSide,
    OptionSpec,
    PremiumStyle,
    PricingResult,
    QuotedInstrument,
    SnapshotFile,
    TenorQuote,
    Variant,
)

# ── TenorQuote ──


def test_tenor_quote_valid():
    q = TenorQuote(tau=1.0, sigma_atm=0.1685, sigma_rr25=-0.013, sigma_bf25=0.011)
    assert q.bf_kind == "two_vol"


def test_tenor_quote_rejects_negative_pillar():
    with pytest.raises(ValidationError, match="non-positive"):
        TenorQuote(tau=1.0, sigma_atm=0.05, sigma_rr25=0.2, sigma_bf25=0.0)


def test_tenor_quote_rejects_zero_atm():
    with pytest.raises(ValidationError):
        TenorQuote(tau=1.0, sigma_atm=0.0, sigma_rr25=0.0, sigma_bf25=0.0)


# ── Conventions ──


def test_conventions_default_is_spot_premium_excluded():
    conv = Conventions()
    assert conv.atm_style == AtmStyle.DN_EXCLUDED


def test_conventions_atm_must_match_premium():
    with pytest.raises(ValidationError, match="does not match"):
        Conventions(premium_style=PremiumStyle.INCLUDED, atm_style=AtmStyle.DN_EXCLUDED)


def test_conventions_forward_atm_always_allowed():
    Conventions(premium_style=PremiumStyle.INCLUDED, atm_style=AtmStyle.FORWARD)


# ── OptionSpec ──


def test_vanilla_needs_strike():
    with pytest.raises(ValidationError, match="needs a strike"):
        OptionSpec(kind=OptionKind.VANILLA_CALL, tau=1.0)


def test_touch_takes_no_strike():
    with pytest.raises(ValidationError, match="takes no strike"):
        OptionSpec(kind=OptionKind.ONE_TOUCH, tau=1.0, strike=1.0, upper_barrier=1.2)


def test_up_out_needs_upper_barrier_only():
    with pytest.raises(ValidationError):
        OptionSpec(kind=OptionKind.UP_OUT_CALL, tau=1.0, strike=1.0, lower_barrier=0.8)


def test_one_touch_needs_exactly_one_barrier():
    with pytest.raises(ValidationError, match="exactly one barrier"):
        OptionSpec(kind=OptionKind.ONE_TOUCH, tau=1.0, lower_barrier=0.8, upper_barrier=1.2)


def test_double_barrier_order():
    with pytest.raises(ValidationError, match="below the upper"):
        OptionSpec(
            kind=OptionKind.DKO_CALL, tau=1.0, strike=1.0, lower_barrier=1.2, upper_barrier=0.8
        )


def test_kiko_needs_knock_in_side():
    with pytest.raises(ValidationError, match="knock_in"):
        OptionSpec(
            kind=OptionKind.KIKO_CALL, tau=1.0, strike=1.0, lower_barrier=0.8, upper_barrier=1.2
        )


def test_spec_side_and_treasury():
    call = OptionSpec(kind=OptionKind.UP_OUT_CALL, tau=1.0, strike=1.0, upper_barrier=1.2)
    touch = OptionSpec(kind=OptionKind.NO_TOUCH, tau=1.0, lower_barrier=0.9)
    assert call.side == OptionSide.CALL
    assert not call.is_treasury
    assert touch.side is None
    assert touch.is_treasury


def test_spec_rejects_non_positive_tau():
    with pytest.raises(ValidationError):
        OptionSpec(kind=OptionKind.VANILLA_PUT, tau=0.0, strike=1.0)


# ── Ladders ──


def test_ladder_needs_exactly_one_definition():
    with pytest.raises(ValidationError, match="exactly one"):
        LadderSpec(levels=[1.1, 1.2], touch_probabilities=[0.1, 0.2])
    with pytest.raises(ValidationError, match="exactly one"):
        LadderSpec()


def test_ladder_must_be_monotone():
    with pytest.raises(ValidationError, match="monotone"):
        LadderSpec(levels=[1.1, 1.3, 1.2])


def test_ladder_probabilities_inside_unit_interval():
    with pytest.raises(ValidationError, match=r"\(0, 1\)"):
        LadderSpec(touch_probabilities=[0.5, 1.0])


def test_ladder_decreasing_is_fine():
    ladder = LadderSpec(side=BarrierSide.LOWER, levels=[1.0, 0.9, 0.8])
    assert ladder.levels == [1.0, 0.9, 0.8]


# ── Quotes and fits ──


def test_quoted_instrument_mean_and_spread():
    spec = OptionSpec(kind=OptionKind.ONE_TOUCH, tau=1.0, upper_barrier=1.2)
    q = QuotedInstrument(spec=spec, prices=[0.30, 0.32, 0.31])
    assert q.mean == pytest.approx(0.31)
    assert q.spread == pytest.approx(0.02)


def test_fit_config_effective_variant():
    assert FitConfig(constraint=FitConstraint.CONFIG1).effective_variant == Variant.SURV
    assert FitConfig(constraint=FitConstraint.CONFIG4).effective_variant == Variant.FET
    free = FitConfig(constraint=FitConstraint.FREE, variant=Variant.SURV)
    assert free.effective_variant == Variant.SURV


# ── Results and files ──


def test_pricing_result_smile_value_and_premium():
    result = PricingResult(
        kind=OptionKind.VANILLA_CALL, bstv=0.05, vv_price=0.055, final_price=0.055, notional=2e6
    )
    assert result.smile_value == pytest.approx(0.005)
    assert result.premium == pytest.approx(110_000.0)


def test_snapshot_file_schema_version():
    doc = SnapshotFile(spot=1.0, r_d=0.01, r_f=0.02)
    assert doc.schema_version == 1
    with pytest.raises(ValidationError):
        SnapshotFile.model_validate({"spot": 1.0, "r_d": 0.0, "r_f": 0.0, "schema_version": 2})
