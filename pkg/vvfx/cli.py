"""
Command-line surface: price, smile, sweep, calibrate, verify and serve.

Exit codes: 0 success, 1 failed verification, 2 invalid input, 3 numerical failure.
Diagnostics go to stderr; stdout only receives output once a command has succeeded.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from loguru import logger
from pydantic import ValidationError

from vvfx import files
from vvfx.calibration import fit
from vvfx.config import settings
from vvfx.mc import default_config
from vvfx.models import (
    DomainError,
    FitConfig,
    InterpolationRule,
    McConfig,
    NumericalError,
    PricingResult,
    SmileReport,
    SweepRow,
    VerifyCheck,
)
from vvfx.pricing import (
    curve_for,
    market_sensitivities,
    price_instrument,
    run_sweep,
    summarize_issues,
)
from vvfx.smile import smile_report
from vvfx.verify import run_checks

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def pct(value: float | None) -> float | None:
    """Fraction of notional as percent, rounded to 6 decimals."""
    return None if value is None else round(100.0 * value, 6)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(doc: object) -> str:
    return json.dumps(doc, indent=2) + "\n"


# ──────────────────────────────────────────────
# Renderers
# ──────────────────────────────────────────────


def render_price(
    result: PricingResult, fmt: str, sensitivities: tuple[float, float] | None = None
) -> str:
    row: dict[str, object] = {
        "kind": result.kind.value,
        "bstv_pct": pct(result.bstv),
        "vega_term_pct": pct(result.vega_term),
        "vanna_term_pct": pct(result.vanna_term),
        "volga_term_pct": pct(result.volga_term),
        "gamma": round(result.gamma, 6),
        "p_vanna": round(result.p_vanna, 6),
        "p_volga": round(result.p_volga, 6),
        "vv_price_pct": pct(result.vv_price),
        "final_price_pct": pct(result.final_price),
        "premium": round(result.premium, 6),
        "flags": ";".join(f.value for f in result.flags),
    }
    if sensitivities is not None:
        row["lambda_rr_pct"] = pct(sensitivities[0])
        row["lambda_bf_pct"] = pct(sensitivities[1])
    if fmt == "csv":
        return _csv(list(row), [list(row.values())])
    row["constituents"] = [
        {
            "sign": c.sign,
            "kind": c.spec.kind.value,
            "bstv_pct": pct(c.bstv),
            "vv_price_pct": pct(c.vv_price),
            "final_price_pct": pct(c.final_price),
            "gamma": round(c.gamma, 6),
            "applied_rules": [r.value for r in c.applied_rules],
        }
        for c in result.constituents
    ]
    row["warnings"] = [s.model_dump() for s in summarize_issues(result.issues)]
    return _json(row)


def render_smile(report: SmileReport, fmt: str) -> str:
    if fmt == "csv":
        return _csv(["strike", "vol_pct"], [[round(k, 6), pct(v)] for k, v in report.grid])
    return report.model_dump_json(indent=2) + "\n"


def render_sweep(rows: list[SweepRow], fmt: str) -> str:
    variants = sorted({v for r in rows for v in r.modsv})
    if fmt == "json":
        return _json(
            [
                {
                    "index": r.index,
                    "level": r.level,
                    "touch_probability": r.touch_probability,
                    "bstv_pct": pct(r.bstv),
                    **{f"modsv_{v}_pct": pct(r.modsv.get(v)) for v in variants},
                    "error": r.error,
                }
                for r in rows
            ]
        )
    header = ["index", "level", "touch_probability", "bstv_pct"]
    header += [f"modsv_{v}_pct" for v in variants] + ["error"]
    body = [
        [
            r.index,
            "" if r.level is None else round(r.level, 6),
            "" if r.touch_probability is None else round(r.touch_probability, 6),
            "" if r.bstv is None else pct(r.bstv),
            *["" if v not in r.modsv else pct(r.modsv[v]) for v in variants],
            r.error or "",
        ]
        for r in rows
    ]
    return _csv(header, body)


def render_checks(checks: list[VerifyCheck], fmt: str) -> str:
    if fmt == "json":
        return _json([c.model_dump() for c in checks])
    return _csv(
        ["name", "passed", "model", "oracle", "tolerance", "detail"],
        [
            [
                c.name,
                c.passed,
                f"{c.model_value:.8f}",
                f"{c.oracle_value:.8f}",
                f"{c.tolerance:.2e}",
                c.detail,
            ]
            for c in checks
        ],
    )


# ──────────────────────────────────────────────
# Commands
# ──────────────────────────────────────────────


def cmd_price(args: argparse.Namespace) -> tuple[int, str]:
    snapshot = files.load_snapshot(args.snapshot)
    spec = files.load_instrument(args.instrument)
    params = files.load_params(args.params) if args.params else None
    result = price_instrument(spec, snapshot, params, include_vega=args.include_vega)
    sens = market_sensitivities(spec, snapshot, params) if args.sensitivities else None
    return EXIT_OK, render_price(result, args.format, sens)


def cmd_smile(args: argparse.Namespace) -> tuple[int, str]:
    snapshot = files.load_snapshot(args.snapshot)
    curve = curve_for(snapshot, args.tau, InterpolationRule(args.rule))
    return EXIT_OK, render_smile(smile_report(curve, args.grid_points), args.format)


def cmd_sweep(args: argparse.Namespace) -> tuple[int, str]:
    snapshot = files.load_snapshot(args.snapshot)
    sweep = files.load_sweep(args.config)
    params = files.load_params(args.params) if args.params else None
    return EXIT_OK, render_sweep(run_sweep(sweep, snapshot, params), args.format)


def cmd_calibrate(args: argparse.Namespace) -> tuple[int, str]:
    snapshot = files.load_snapshot(args.snapshot)
    quotes = files.load_quotes(args.quotes)
    config = files.load_fit_config(args.config) if args.config else FitConfig()
    result = fit(quotes, config, snapshot)
    files.save_params(
        args.output,
        result.params,
        provenance={
            "config": config.model_dump(mode="json"),
            "instrument_count": result.instrument_count,
            "epsilon": result.epsilon,
            "quotes": str(args.quotes),
            "pair": snapshot.pair,
        },
    )
    if args.format == "csv":
        p = result.params
        header = ["constraint", "variant", "a", "b", "c", "gamma_star", "instruments", "epsilon"]
        values = [result.constraint.value, p.variant.value, p.a, p.b, p.c, p.gamma_star]
        text = _csv(header, [values + [result.instrument_count, result.epsilon]])
    else:
        text = result.model_dump_json(indent=2) + "\n"
    return EXIT_OK, text


def cmd_verify(args: argparse.Namespace) -> tuple[int, str]:
    snapshot = files.load_snapshot(args.snapshot) if args.snapshot else None
    cfg = files.load_mc_config(args.config) if args.config else default_config()
    update = {k: v for k, v in (("seed", args.seed), ("paths", args.paths)) if v is not None}
    if update:
        cfg = McConfig.model_validate({**cfg.model_dump(), **update})
    checks = run_checks(snapshot, cfg)
    code = EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY_FAILED
    return code, render_checks(checks, args.format)


def cmd_serve(args: argparse.Namespace) -> tuple[int, str]:
    import uvicorn

    uvicorn.run("vvfx.main:app", host=args.host, port=args.port)
    return EXIT_OK, ""


# ──────────────────────────────────────────────
# Parser
# ──────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vvfx", description="Vanna-Volga pricing of first-generation FX exotics"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
        p.add_argument("--format", choices=["json", "csv"], default=fmt)
        p.add_argument("--output", type=Path, help="write to this file instead of stdout")

    p = sub.add_parser("price", help="price one instrument")
    p.add_argument("--snapshot", type=Path, required=True)
    p.add_argument("--instrument", type=Path, required=True)
    p.add_argument("--params", type=Path)
    p.add_argument("--include-vega", action="store_true", help="add the Omega_vega term")
    p.add_argument("--sensitivities", action="store_true", help="bump RR and BF quotes")
    common(p)
    p.set_defaults(handler=cmd_price)

    p = sub.add_parser("smile", help="inspect the smile of one tenor")
    p.add_argument("--snapshot", type=Path, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--rule", choices=[r.value for r in InterpolationRule], default="vanna_volga")
    p.add_argument("--grid-points", type=int, default=21)
    common(p)
    p.set_defaults(handler=cmd_smile)

    p = sub.add_parser("sweep", help="price a barrier ladder")
    p.add_argument("--snapshot", type=Path, required=True)
    p.add_argument("--config", type=Path, required=True, help="sweep spec")
    p.add_argument("--params", type=Path)
    common(p, fmt="csv")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit attenuation coefficients to quotes")
    p.add_argument("--snapshot", type=Path, required=True)
    p.add_argument("--quotes", type=Path, required=True)
    p.add_argument("--config", type=Path, help="fit configuration")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--output", type=Path, required=True, help="params file to write")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("verify", help="check closed forms against Monte Carlo")
    p.add_argument("--snapshot", type=Path)
    p.add_argument("--config", type=Path, help="Monte Carlo configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int)
    common(p, fmt="csv")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default=settings.host)
    p.add_argument("--port", type=int, default=settings.port)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logger.remove()
    logger.add(sys.stderr, level=settings.log_level)

    output = getattr(args, "output", None)
    try:
        code, text = args.handler(args)
        if args.command != "calibrate" and output is not None:
            output.write_text(text, encoding="utf-8")
            logger.info("Wrote {}", output)
        elif text:
            sys.stdout.write(text)
    except (ValidationError, DomainError, OSError, json.JSONDecodeError) as e:
        logger.error("Invalid input: {}", e)
        return EXIT_INVALID
    except NumericalError as e:
        logger.error("Numerical failure: {}", e)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
