"""Unit tests for replication and the no-arbitrage clamps."""

import numpy as np
import pytest

from tests.conftest import assert_no_arbitrage, random_instrument, random_market
from vvfx.arbitrage import clamp, decompose, single_barrier_legs, vanilla_of, wko_bounds
from vvfx.models import BarrierSide, ClampRule, OptionKind, OptionSpec, Variant, VVParams
from vvfx.pricing import price_instrument

# ── decomposition ──


@pytest.mark.parametrize(
    "kind_in,kind_out,barriers",
    [
        (OptionKind.UP_IN_CALL, OptionKind.UP_OUT_CALL, {"upper_barrier": 1.2}),
        (OptionKind.DOWN_IN_PUT, OptionKind.DOWN_OUT_PUT, {"lower_barrier": 0.8}),
        (OptionKind.DKI_CALL, OptionKind.DKO_CALL, {"lower_barrier": 0.8, "upper_barrier": 1.2}),
    ],
)
def test_knock_in_is_vanilla_minus_knock_out(kind_in, kind_out, barriers):
    spec = OptionSpec(kind=kind_in, tau=1.0, strike=1.0, notional=5.0, **barriers)
    (s1, vanilla), (s2, knock_out) = decompose(spec)
    assert (s1, s2) == (1, -1)
    assert vanilla.kind in (OptionKind.VANILLA_CALL, OptionKind.VANILLA_PUT)
    assert vanilla.strike == 1.0
    assert vanilla.notional == 5.0
    assert knock_out.kind == kind_out
    assert knock_out.upper_barrier == spec.upper_barrier
    assert knock_out.lower_barrier == spec.lower_barrier


def test_touches_are_cash_minus_no_touch():
    ot = OptionSpec(kind=OptionKind.ONE_TOUCH, tau=1.0, upper_barrier=1.2)
    dot = OptionSpec(kind=OptionKind.DOUBLE_ONE_TOUCH, tau=1.0, lower_barrier=0.8, upper_barrier=1.2)
    assert [(s, leg.kind) for s, leg in decompose(ot)] == [
        (1, OptionKind.CASH),
        (-1, OptionKind.NO_TOUCH),
    ]
    assert [(s, leg.kind) for s, leg in decompose(dot)] == [
        (1, OptionKind.CASH),
        (-1, OptionKind.DOUBLE_NO_TOUCH),
    ]


def test_kiko_is_knock_out_minus_double_knock_out():
    spec = OptionSpec(
        kind=OptionKind.KIKO_CALL,
        tau=1.0,
        strike=1.0,
        lower_barrier=0.85,
        upper_barrier=1.25,
        knock_in=BarrierSide.LOWER,
    )
    (s1, knock_out), (s2, dko) = decompose(spec)
    assert (s1, s2) == (1, -1)
    assert knock_out.kind == OptionKind.UP_OUT_CALL
    assert knock_out.upper_barrier == 1.25
    assert dko.kind == OptionKind.DKO_CALL
    assert dko.knock_in is None


@pytest.mark.parametrize(
    "kind", [OptionKind.VANILLA_PUT, OptionKind.NO_TOUCH, OptionKind.DKO_PUT, OptionKind.CASH]
)
def test_priceable_kinds_pass_through(kind):
    barriers = {
        OptionKind.VANILLA_PUT: {"strike": 1.0},
        OptionKind.NO_TOUCH: {"lower_barrier": 0.9},
        OptionKind.DKO_PUT: {"strike": 1.0, "lower_barrier": 0.8, "upper_barrier": 1.2},
        OptionKind.CASH: {},
    }[kind]
    spec = OptionSpec(kind=kind, tau=1.0, **barriers)
    assert decompose(spec) == [(1, spec)]


def test_single_barrier_legs_of_double_knock_out():
    spec = OptionSpec(
        kind=OptionKind.DKO_PUT, tau=1.0, strike=1.0, lower_barrier=0.8, upper_barrier=1.2
    )
    lower, upper = single_barrier_legs(spec)
    assert lower.kind == OptionKind.DOWN_OUT_PUT
    assert upper.kind == OptionKind.UP_OUT_PUT
    assert vanilla_of(spec).kind == OptionKind.VANILLA_PUT


# ── clamps ──


def test_clamp_floor():
    report = clamp(-0.01, vanilla_ref=0.05)
    assert report.clamped == 0.0
    assert report.applied_rules == [ClampRule.FLOOR_ZERO]


def test_clamp_vanilla_cap():
    report = clamp(0.06, vanilla_ref=0.05)
    assert report.clamped == 0.05
    assert report.applied_rules == [ClampRule.KO_LE_VANILLA]


def test_clamp_single_barrier_caps_in_order():
    report = clamp(0.05, vanilla_ref=0.06, single_refs=(0.04, 0.03))
    assert report.clamped == 0.03
    assert report.applied_rules == [ClampRule.DKO_LE_KO1, ClampRule.DKO_LE_KO2]


def test_clamp_leaves_valid_price_alone():
    report = clamp(0.02, vanilla_ref=0.05, single_refs=(0.04, 0.03))
    assert report.clamped == report.original == 0.02
    assert report.applied_rules == []


def test_clamp_fuzz():
    rng = np.random.default_rng(17)
    for _ in range(10_000):
        price = float(rng.normal(0.02, 0.05))
        vanilla = float(rng.uniform(-0.01, 0.1))
        ko1, ko2 = (float(x) for x in rng.uniform(-0.01, 0.1, size=2))
        report = clamp(price, vanilla, (ko1, ko2))
        out = report.clamped
        assert 0.0 <= out <= max(vanilla, 0.0)
        assert out <= max(ko1, 0.0)
        assert out <= max(ko2, 0.0)
        again = clamp(out, vanilla, (ko1, ko2))
        assert again.clamped == out
        assert again.applied_rules == []


def test_wko_bounds():
    assert wko_bounds(0.04, vanilla=0.05, knock_out=0.02).clamped == 0.04
    above = wko_bounds(0.07, vanilla=0.05, knock_out=0.02)
    assert above.clamped == 0.05
    assert above.applied_rules == [ClampRule.WKO_BOUNDS]
    assert wko_bounds(0.01, vanilla=0.05, knock_out=0.02).clamped == 0.02


# ── priced instruments ──


def test_priced_instruments_respect_bounds():
    """Random instruments on random markets come out of the pipeline inside their bounds."""
    rng = np.random.default_rng(29)
    params = VVParams(variant=Variant.SURV)
    for _ in range(300):
        snapshot = random_market(rng)
        spec = random_instrument(rng, snapshot)
        assert_no_arbitrage(price_instrument(spec, snapshot, params), snapshot, params)
