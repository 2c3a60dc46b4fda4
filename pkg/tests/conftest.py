"""Shared fixtures for unit tests."""

import math

import numpy as np
import pytest

from vvfx.arbitrage import clamp, single_barrier_legs, vanilla_of
from vvfx.models import (
    DOUBLE,
    LOWER_ONLY,
    STRIKELESS,
    UPPER_ONLY,
    AtmStyle,
    BarrierSide,
    BfKind,
    Conventions,
    MarketSnapshot,
    McConfig,
    OptionKind,
    OptionSpec,
    PremiumStyle,
    PricingResult,
    TenorQuote,
    VVParams,
)

# USD premium quoted on the pillars: spot delta, premium included
PREMIUM_INCLUDED = Conventions(
    premium_style=PremiumStyle.INCLUDED, atm_style=AtmStyle.DN_INCLUDED
)


@pytest.fixture(autouse=True)
def _clear_caches():
    """Smile and hedge caches are module-level; start every test cold."""
    from vvfx.pricing import clear_caches

    clear_caches()
    yield
    clear_caches()


def usdchf_quote(bf_kind: BfKind = BfKind.TWO_VOL, tau: float = 1.0) -> TenorQuote:
    return TenorQuote(
        tau=tau,
        sigma_atm=0.1685,
        sigma_rr25=-0.013,
        sigma_bf25=0.011 if bf_kind == BfKind.TWO_VOL else 0.0104,
        bf_kind=bf_kind,
    )


@pytest.fixture
def usdchf() -> MarketSnapshot:
    """USDCHF 1y, 8 Jan 09."""
    return MarketSnapshot(
        pair="USDCHF",
        spot=1.0902,
        r_d=0.013,
        r_f=0.0203,
        conventions=PREMIUM_INCLUDED,
        quotes=[usdchf_quote()],
    )


@pytest.fixture
def usdjpy() -> MarketSnapshot:
    """USDJPY 1y, 28 Nov 08."""
    return MarketSnapshot(
        pair="USDJPY",
        spot=95.47,
        r_d=0.0174,
        r_f=0.0374,
        conventions=PREMIUM_INCLUDED,
        quotes=[TenorQuote(tau=1.0, sigma_atm=0.1485, sigma_rr25=-0.094, sigma_bf25=0.0145)],
    )


@pytest.fixture
def eurusd() -> MarketSnapshot:
    """S = 1.3, tau = 1.3, r_d = 5%, r_f = 3%, flat 20% vol."""
    return MarketSnapshot(
        pair="EURUSD",
        spot=1.3,
        r_d=0.05,
        r_f=0.03,
        quotes=[TenorQuote(tau=1.3, sigma_atm=0.2, sigma_rr25=0.0, sigma_bf25=0.0)],
    )


@pytest.fixture
def flat() -> MarketSnapshot:
    """Flat 10% smile at one year."""
    return MarketSnapshot(
        pair="EURUSD",
        spot=1.0,
        r_d=0.03,
        r_f=0.01,
        quotes=[TenorQuote(tau=1.0, sigma_atm=0.1, sigma_rr25=0.0, sigma_bf25=0.0)],
    )


@pytest.fixture
def small_mc() -> McConfig:
    """Cheap oracle run for unit tests."""
    return McConfig(paths=40_000, steps_per_year=250, seed=11, batch_size=10_000)


# ── random instruments and markets ──

_SINGLE_KO = {
    OptionKind.UP_OUT_CALL,
    OptionKind.UP_OUT_PUT,
    OptionKind.DOWN_OUT_CALL,
    OptionKind.DOWN_OUT_PUT,
}


def random_market(rng: np.random.Generator) -> MarketSnapshot:
    quote = TenorQuote(
        tau=float(rng.uniform(0.25, 2.0)),
        sigma_atm=float(rng.uniform(0.07, 0.25)),
        sigma_rr25=float(rng.uniform(-0.03, 0.03)),
        sigma_bf25=float(rng.uniform(0.001, 0.01)),
    )
    return MarketSnapshot(
        spot=float(rng.uniform(0.7, 1.6)),
        r_d=float(rng.uniform(0.0, 0.05)),
        r_f=float(rng.uniform(0.0, 0.05)),
        conventions=PREMIUM_INCLUDED if rng.random() < 0.5 else Conventions(),
        quotes=[quote],
    )


def random_instrument(rng: np.random.Generator, snapshot: MarketSnapshot) -> OptionSpec:
    """Any kind, strike near spot, barriers on either side of it."""
    kind = OptionKind(rng.choice([k.value for k in OptionKind]))
    spot = snapshot.spot
    lower = spot * float(rng.uniform(0.7, 0.95))
    upper = spot * float(rng.uniform(1.05, 1.4))
    fields: dict = {"kind": kind, "tau": snapshot.quotes[0].tau}
    if kind not in STRIKELESS:
        fields["strike"] = spot * float(rng.uniform(0.96, 1.04))
    if kind in UPPER_ONLY:
        fields["upper_barrier"] = upper
    elif kind in LOWER_ONLY:
        fields["lower_barrier"] = lower
    elif kind in DOUBLE:
        fields["lower_barrier"], fields["upper_barrier"] = lower, upper
    elif kind in (OptionKind.ONE_TOUCH, OptionKind.NO_TOUCH):
        key = "upper_barrier" if rng.random() < 0.5 else "lower_barrier"
        fields[key] = upper if key == "upper_barrier" else lower
    if kind in (OptionKind.KIKO_CALL, OptionKind.KIKO_PUT):
        fields["knock_in"] = BarrierSide.LOWER if rng.random() < 0.5 else BarrierSide.UPPER
    return OptionSpec(**fields)


def assert_no_arbitrage(result: PricingResult, snapshot: MarketSnapshot, params: VVParams):
    """Every clamped constituent sits inside its bounds and clamping it again is a no-op."""
    from vvfx.pricing import price_instrument

    def price(spec: OptionSpec) -> float:
        return price_instrument(spec, snapshot, params).final_price

    for c in result.constituents:
        leg = c.spec
        discount = math.exp(-snapshot.r_d * leg.tau)
        vanilla_ref: float | None = None
        singles: tuple[float | None, float | None] = (None, None)
        if leg.kind in _SINGLE_KO:
            vanilla_ref = price(vanilla_of(leg))
        elif leg.kind in (OptionKind.DKO_CALL, OptionKind.DKO_PUT):
            vanilla_ref = price(vanilla_of(leg))
            lo, hi = single_barrier_legs(leg)
            singles = (price(lo), price(hi))
        elif leg.kind == OptionKind.NO_TOUCH:
            vanilla_ref = discount
        elif leg.kind == OptionKind.DOUBLE_NO_TOUCH:
            vanilla_ref = discount
            lo, hi = single_barrier_legs(leg)
            singles = (price(lo), price(hi))

        assert c.final_price >= 0.0
        for ref in (vanilla_ref, *singles):
            if ref is not None:
                assert c.final_price <= max(ref, 0.0)
        again = clamp(c.final_price, vanilla_ref, singles)
        assert again.clamped == c.final_price
        assert again.applied_rules == []

    assert result.final_price >= -1e-12
