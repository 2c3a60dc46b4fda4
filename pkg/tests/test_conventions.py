"""Unit tests for forwards, deltas, ATM strikes and strike-from-delta."""

import math

import pytest
from scipy.stats import norm

from vvfx.conventions import (
    NoSolutionError,
    atm_strike,
    delta,
    discount_factor,
    forward_price,
    strike_from_delta,
)
from vvfx.models import (
    AtmStyle,
    Conventions,
    DeltaStyle,
    DomainError,
    MarketSnapshot,
    OptionSide,
    PremiumStyle,
)

SNAP = MarketSnapshot(spot=1.0902, r_d=0.013, r_f=0.0203)

ALL_CONVENTIONS = [
    Conventions(delta_style=d, premium_style=p, atm_style=a)
    for d in DeltaStyle
    for p, a in (
        (PremiumStyle.EXCLUDED, AtmStyle.DN_EXCLUDED),
        (PremiumStyle.INCLUDED, AtmStyle.DN_INCLUDED),
    )
]


# ── forwards ──


def test_forward_price():
    assert forward_price(SNAP, 1.0) == pytest.approx(1.0902 * math.exp(0.013 - 0.0203), abs=1e-14)


def test_negative_tau_rejected():
    with pytest.raises(DomainError):
        forward_price(SNAP, -0.1)
    with pytest.raises(DomainError):
        discount_factor(0.01, -1.0)


# ── delta ──


def test_spot_delta_premium_excluded_matches_textbook():
    k, sigma, tau = 1.15, 0.17, 1.0
    forward = forward_price(SNAP, tau)
    d1 = (math.log(forward / k) + 0.5 * sigma * sigma * tau) / (sigma * math.sqrt(tau))
    expected = math.exp(-SNAP.r_f * tau) * norm.cdf(d1)
    got = delta(OptionSide.CALL, SNAP.spot, k, sigma, tau, SNAP.r_d, SNAP.r_f, Conventions())
    assert got == pytest.approx(expected, abs=1e-14)


def test_delta_needs_positive_vol():
    with pytest.raises(DomainError):
        delta(OptionSide.CALL, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, Conventions())


# ── strike_from_delta ──


@pytest.mark.parametrize("conv", ALL_CONVENTIONS)
@pytest.mark.parametrize("side,target", [(OptionSide.CALL, 0.25), (OptionSide.PUT, -0.25)])
def test_strike_from_delta_round_trip(conv, side, target):
    sigma, tau = 0.17, 1.0
    k = strike_from_delta(target, side, sigma, SNAP, tau, conv)
    assert delta(side, SNAP.spot, k, sigma, tau, SNAP.r_d, SNAP.r_f, conv) == pytest.approx(
        target, abs=1e-10
    )


def test_strike_from_delta_wrong_sign():
    with pytest.raises(DomainError):
        strike_from_delta(-0.25, OptionSide.CALL, 0.1, SNAP, 1.0, Conventions())


def test_strike_from_delta_unreachable():
    with pytest.raises(NoSolutionError):
        strike_from_delta(0.99, OptionSide.CALL, 0.1, SNAP, 1.0, Conventions())


def test_premium_included_call_returns_otm_root():
    conv = ALL_CONVENTIONS[1]
    k = strike_from_delta(0.25, OptionSide.CALL, 0.17, SNAP, 1.0, conv)
    assert k > forward_price(SNAP, 1.0)


# ── ATM ──


def test_atm_delta_neutral_excluded():
    forward, sigma, tau = forward_price(SNAP, 1.0), 0.1685, 1.0
    conv = Conventions()
    k = atm_strike(forward, sigma, tau, conv)
    call = delta(OptionSide.CALL, SNAP.spot, k, sigma, tau, SNAP.r_d, SNAP.r_f, conv)
    put = delta(OptionSide.PUT, SNAP.spot, k, sigma, tau, SNAP.r_d, SNAP.r_f, conv)
    assert call + put == pytest.approx(0.0, abs=1e-12)


def test_atm_delta_neutral_included():
    forward, sigma, tau = forward_price(SNAP, 1.0), 0.1685, 1.0
    conv = Conventions(premium_style=PremiumStyle.INCLUDED, atm_style=AtmStyle.DN_INCLUDED)
    k = atm_strike(forward, sigma, tau, conv)
    call = delta(OptionSide.CALL, SNAP.spot, k, sigma, tau, SNAP.r_d, SNAP.r_f, conv)
    put = delta(OptionSide.PUT, SNAP.spot, k, sigma, tau, SNAP.r_d, SNAP.r_f, conv)
    assert call + put == pytest.approx(0.0, abs=1e-12)
    assert k < forward


def test_atm_forward_convention():
    conv = Conventions(atm_style=AtmStyle.FORWARD)
    assert atm_strike(1.2, 0.15, 2.0, conv) == 1.2
