"""Full-size acceptance runs: Monte Carlo at 10^6 paths and the arbitrage fuzz (`-m oracle`)."""

import numpy as np
import pytest

from tests.conftest import assert_no_arbitrage, random_instrument, random_market
from vvfx.bs import bs_price
from vvfx.mc import default_config, mc_price
from vvfx.models import McConfig, OptionKind, OptionSpec, PricingFlag, Variant, VVParams
from vvfx.pricing import price_instrument
from vvfx.verify import check_fet, check_survival, checks_for, reference_market, run_checks

pytestmark = pytest.mark.oracle

SIGMA, TAU = 0.2, 1.3


@pytest.fixture(scope="module")
def full_config() -> McConfig:
    return default_config().model_copy(update={"paths": 1_000_000})


# ── vicinity measures ──


@pytest.mark.parametrize("level", list(np.linspace(1.34, 1.7, 10)))
def test_fet_ladder(full_config, level):
    check = check_fet(reference_market(), SIGMA, TAU, full_config, float(level))
    assert check.passed, check


@pytest.mark.parametrize("level", [1.4, 1.55, 1.7])
def test_survival_ladder(full_config, level):
    check = check_survival(reference_market(), SIGMA, TAU, full_config, level)
    assert check.passed, check


# ── double-barrier series ──


def _corridors() -> list[tuple[OptionKind, float, float, float]]:
    out = []
    for lo, hi in ((1.1, 1.5), (1.0, 1.6), (1.2, 1.45), (0.9, 1.9), (1.15, 1.7)):
        for kind in (OptionKind.DKO_CALL, OptionKind.DKO_PUT):
            out.append((kind, lo, hi, 1.3))
        out.append((OptionKind.DOUBLE_NO_TOUCH, lo, hi, 0.0))
        out.append((OptionKind.DKO_CALL, lo, hi, 0.5 * (lo + 1.3)))
    return out


@pytest.mark.parametrize("kind,lower,upper,strike", _corridors())
def test_double_barrier_series(full_config, kind, lower, upper, strike):
    spec = OptionSpec(
        kind=kind,
        tau=TAU,
        strike=strike or None,
        lower_barrier=lower,
        upper_barrier=upper,
    )
    market = reference_market()
    closed, flags = bs_price(spec, SIGMA, market)
    assert PricingFlag.SERIES_WARNING not in flags
    oracle = mc_price(spec, SIGMA, market, full_config)
    assert abs(closed - oracle.estimate) <= 3.0 * oracle.std_error + 1e-6


# ── no-arbitrage bounds ──


def test_arbitrage_bounds_over_ten_thousand_instruments():
    rng = np.random.default_rng(41)
    params = VVParams(variant=Variant.SURV)
    for _ in range(10_000):
        snapshot = random_market(rng)
        spec = random_instrument(rng, snapshot)
        assert_no_arbitrage(price_instrument(spec, snapshot, params), snapshot, params)


# ── engine ──


def test_standard_error_scales_with_paths(full_config):
    spec = OptionSpec(kind=OptionKind.VANILLA_CALL, tau=TAU, strike=1.3)
    small = mc_price(spec, SIGMA, reference_market(), full_config.model_copy(update={"paths": 10_000}))
    large = mc_price(spec, SIGMA, reference_market(), full_config)
    assert small.std_error / large.std_error == pytest.approx(10.0, rel=0.2)


def test_full_report_passes(full_config):
    report = run_checks(None, full_config)
    assert len(report) == len(checks_for(None, full_config))
    failed = [c.name for c in report if not c.passed]
    assert not failed
