"""
Replication of knock-ins and touches into priceable constituents, and the
no-arbitrage clamps applied to Vanna-Volga prices of those constituents.
"""

from vvfx.models import (
    BarrierSide,
    ClampReport,
    ClampRule,
    DomainError,
    OptionKind,
    OptionSpec,
)

_IN_TO_OUT = {
    OptionKind.UP_IN_CALL: OptionKind.UP_OUT_CALL,
    OptionKind.DOWN_IN_CALL: OptionKind.DOWN_OUT_CALL,
    OptionKind.UP_IN_PUT: OptionKind.UP_OUT_PUT,
    OptionKind.DOWN_IN_PUT: OptionKind.DOWN_OUT_PUT,
    OptionKind.DKI_CALL: OptionKind.DKO_CALL,
    OptionKind.DKI_PUT: OptionKind.DKO_PUT,
}

_PASS_THROUGH = frozenset(
    {
        OptionKind.VANILLA_CALL,
        OptionKind.VANILLA_PUT,
        OptionKind.UP_OUT_CALL,
        OptionKind.DOWN_OUT_CALL,
        OptionKind.UP_OUT_PUT,
        OptionKind.DOWN_OUT_PUT,
        OptionKind.DKO_CALL,
        OptionKind.DKO_PUT,
        OptionKind.NO_TOUCH,
        OptionKind.DOUBLE_NO_TOUCH,
        OptionKind.CASH,
    }
)


def vanilla_of(spec: OptionSpec) -> OptionSpec:
    """The vanilla with the same strike, side and expiry."""
    kind = OptionKind.VANILLA_CALL if spec.kind.value.endswith("_call") else OptionKind.VANILLA_PUT
    return OptionSpec(kind=kind, tau=spec.tau, strike=spec.strike, notional=spec.notional)


def cash_of(spec: OptionSpec) -> OptionSpec:
    return OptionSpec(kind=OptionKind.CASH, tau=spec.tau, notional=spec.notional)


def single_barrier_legs(spec: OptionSpec) -> tuple[OptionSpec, OptionSpec]:
    """(lower-only, upper-only) counterparts of a double knock-out or double no-touch."""
    if spec.kind in (OptionKind.DOUBLE_NO_TOUCH, OptionKind.DOUBLE_ONE_TOUCH):
        lower = OptionSpec(
            kind=OptionKind.NO_TOUCH, tau=spec.tau, lower_barrier=spec.lower_barrier
        )
        upper = OptionSpec(
            kind=OptionKind.NO_TOUCH, tau=spec.tau, upper_barrier=spec.upper_barrier
        )
        return lower, upper

    call = spec.kind.value.endswith("_call")
    lower = OptionSpec(
        kind=OptionKind.DOWN_OUT_CALL if call else OptionKind.DOWN_OUT_PUT,
        tau=spec.tau,
        strike=spec.strike,
        lower_barrier=spec.lower_barrier,
    )
    upper = OptionSpec(
        kind=OptionKind.UP_OUT_CALL if call else OptionKind.UP_OUT_PUT,
        tau=spec.tau,
        strike=spec.strike,
        upper_barrier=spec.upper_barrier,
    )
    return lower, upper


def decompose(spec: OptionSpec) -> list[tuple[int, OptionSpec]]:
    """Signed constituents whose sum replicates spec."""
    kind = spec.kind
    if kind in _PASS_THROUGH:
        return [(1, spec)]

    if kind in _IN_TO_OUT:
        knock_out = spec.model_copy(update={"kind": _IN_TO_OUT[kind]})
        return [(1, vanilla_of(spec)), (-1, knock_out)]

    if kind in (OptionKind.KIKO_CALL, OptionKind.KIKO_PUT):
        # pays when the knock-in barrier was touched and the knock-out barrier never was
        lower_ko, upper_ko = single_barrier_legs(spec)
        knock_out = upper_ko if spec.knock_in == BarrierSide.LOWER else lower_ko
        dko = spec.model_copy(
            update={
                "kind": OptionKind.DKO_CALL if kind == OptionKind.KIKO_CALL else OptionKind.DKO_PUT,
                "knock_in": None,
            }
        )
        return [(1, knock_out), (-1, dko)]

    if kind == OptionKind.ONE_TOUCH:
        return [(1, cash_of(spec)), (-1, spec.model_copy(update={"kind": OptionKind.NO_TOUCH}))]

    if kind == OptionKind.DOUBLE_ONE_TOUCH:
        no_touch = spec.model_copy(update={"kind": OptionKind.DOUBLE_NO_TOUCH})
        return [(1, cash_of(spec)), (-1, no_touch)]

    raise DomainError(f"no replication known for {kind}")


# ──────────────────────────────────────────────
# Clamps
# ──────────────────────────────────────────────


def clamp(
    price: float,
    vanilla_ref: float | None = None,
    single_refs: tuple[float | None, float | None] = (None, None),
) -> ClampReport:
    """
    Floor at zero, cap by the vanilla reference, then by each single-barrier reference.

    For touch products the "vanilla" reference is the discounted cash amount and the
    single references are the single no-touches.
    """
    clamped = price
    rules: list[ClampRule] = []

    if clamped < 0.0:
        clamped = 0.0
        rules.append(ClampRule.FLOOR_ZERO)

    if vanilla_ref is not None and clamped > max(vanilla_ref, 0.0):
        clamped = max(vanilla_ref, 0.0)
        rules.append(ClampRule.KO_LE_VANILLA)

    for ref, rule in zip(single_refs, (ClampRule.DKO_LE_KO1, ClampRule.DKO_LE_KO2), strict=True):
        if ref is not None and clamped > max(ref, 0.0):
            clamped = max(ref, 0.0)
            rules.append(rule)

    return ClampReport(original=price, clamped=clamped, applied_rules=rules)


def wko_bounds(window_price: float, vanilla: float, knock_out: float) -> ClampReport:
    """Keep an externally priced window knock-out between the full-tenor knock-out and the vanilla."""
    clamped = min(window_price, vanilla)
    clamped = max(clamped, knock_out)
    rules = [ClampRule.WKO_BOUNDS] if clamped != window_price else []
    return ClampReport(original=window_price, clamped=clamped, applied_rules=rules)
