"""Command-line entry point: ``quantum-slide <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 numerical-validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigurationError, SlideError
from .experiments import resolve_config, run, write_manifest

log = logging.getLogger("quantum_slide")

SUBCOMMANDS = {
    "momentum-map": "momentum_map",
    "gate-run": "gate_run",
    "fidelity-sweep": "fidelity_sweep",
    "scatter-sweep": "scatter_sweep",
    "validate-analytic": "validate_analytic",
}

# subcommand-specific flags: (flag, config key, type)
FLAGS = {
    "gate_run": [("--gate", "gate", str), ("--slide-len", "slide_len", int), ("--input-len", "input_len", int),
                 ("--output-len", "output_len", int), ("--a", "a", float), ("--t-off", "t_off", str),
                 ("--t-final", "t_final", str), ("--widget-file", "widget_file", str)],
    "fidelity_sweep": [("--gates", "gates", str), ("--slide-lengths", "slide_lengths", str), ("--a", "a", float)],
    "scatter_sweep": [("--widget", "widget", str), ("--k-points", "k_points", int),
                      ("--input-rail", "input_rail", int)],
    "momentum_map": [("--a-values", "a_values", str), ("--points", "points", int)],
    "validate_analytic": [("--max-n", "max_N", int)],
}


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _coerce(key, raw, kind):
    if kind is str:
        if key in ("t_off", "t_final"):
            return "auto" if raw == "auto" else float(raw)
        if key in ("gates", "slide_lengths", "a_values"):
            items = [s for s in raw.split(",") if s]
            if key == "gates":
                return items
            return [int(s) for s in items] if key == "slide_lengths" else [float(s) for s in items]
        return raw
    return kind(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantum-slide",
                                     description="Quantum-walk slide and gate-widget experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config file; flags override its keys")
        p.add_argument("--out", type=Path, default=Path("results") / name, help="output directory")
        p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (VALUE parsed as JSON when possible)")
        for flag, key, _ in FLAGS.get(kind, []):
            p.add_argument(flag, dest=f"opt_{key}", default=None)
    return parser


def _overrides(args, kind) -> dict:
    cfg = {}
    if args.config is not None:
        if not args.config.is_file():
            raise ConfigurationError(f"config: file {args.config} does not exist")
        try:
            data = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigurationError("config: top level must be an object")
        declared = data.get("experiment")
        if declared is not None and declared != kind:
            raise ConfigurationError(f"experiment: config is for {declared!r}, not {kind!r}")
        cfg.update(data)
    for flag, key, kind_ in FLAGS.get(kind, []):
        raw = getattr(args, f"opt_{key}")
        if raw is not None:
            try:
                cfg[key] = _coerce(key, raw, kind_)
            except ValueError as exc:
                raise ConfigurationError(f"{key}: cannot parse {raw!r} ({exc})") from None
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        cfg[key.strip()] = _parse_value(raw)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    kind = SUBCOMMANDS[args.command]
    try:
        cfg = resolve_config(kind, _overrides(args, kind))
    except ConfigurationError as exc:
        log.error("config error: %s", exc)
        return 1
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        outcome = run(cfg, out, workers=max(1, args.workers))
    except ConfigurationError as exc:
        write_manifest(out, cfg, None, "failed", str(exc))
        log.error("config error: %s", exc)
        return 1
    except (SlideError, ArithmeticError, ValueError) as exc:
        write_manifest(out, cfg, None, "failed", f"{type(exc).__name__}: {exc}")
        log.error("run failed: %s", exc)
        return 2
    status = "validation-failed" if outcome.validation_failed else "ok"
    write_manifest(out, cfg, outcome, status)
    for line in outcome.summary:
        log.info(line)
    log.info("wrote %s", ", ".join(outcome.files + ["manifest.txt"]))
    return 2 if outcome.validation_failed else 0


if __name__ == "__main__":
    sys.exit(main())
