"""Command-line entry point: ``irsopt {convergence,sweep-power,sweep-elements,verify}``."""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from dataclasses import fields
from typing import Any, Sequence

import numpy as np

from .acceptance import run_all
from .harness import (CONVERGENCE_COLUMNS, SWEEP_COLUMNS, RunSettings, convergence_rows,
                      sweep_elements_rows, sweep_power_rows, write_csv, write_json)
from .model import PhaseAlphabet, config_from_dict, paper_default
from .solver import PenaltySchedule, SolverOptions

CONFIG_ENV = "IRSOPT_CONFIG"
DEFAULT_P_LIST = tuple(float(p) for p in range(-5, 26, 5))
DEFAULT_N_LIST = (0, 20, 40, 60, 80, 100)


def _number_list(text: str) -> list[float]:
    """``"a:step:b"`` (inclusive) or a comma list."""
    if ":" in text:
        a, step, b = (float(x) for x in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("range step must be positive")
        return [float(x) for x in np.arange(a, b + step / 2, step)]
    return [float(x) for x in text.split(",") if x.strip()]


def _alphabet(text: str) -> PhaseAlphabet:
    try:
        return PhaseAlphabet.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _pick(cls, raw: dict[str, Any], rename: dict[str, str] | None = None):
    rename = rename or {}
    kw = {}
    for f in fields(cls):
        key = rename.get(f.name, f.name)
        if key in raw:
            kw[f.name] = type(getattr(cls(), f.name))(raw[key])
    return cls(**kw)


def _load_raw(path: str | None) -> dict[str, Any]:
    import json
    path = os.environ.get(CONFIG_ENV) or path
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def build_settings(args: argparse.Namespace, raw: dict[str, Any]) -> RunSettings:
    config = config_from_dict(raw) if raw else paper_default()
    schedule = _pick(PenaltySchedule, raw)
    opts = _pick(SolverOptions, raw)
    alphabets = tuple(args.alphabet) if args.alphabet else (
        PhaseAlphabet(), PhaseAlphabet(2), PhaseAlphabet(4))
    return RunSettings(config=config, seed=args.seed, trials=args.trials, alphabets=alphabets,
                       schedule=schedule, opts=opts, workers=args.workers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irsopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (overridden by ${CONFIG_ENV})")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--trials", type=int, default=30)
    common.add_argument("--alphabet", type=_alphabet, action="append",
                        help="cp or dp:L; repeatable (default: cp, dp:2, dp:4)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--json", action="store_true", help="write JSON instead of CSV")

    sub.add_parser("convergence", parents=[common], help="per-iteration traces")
    sp = sub.add_parser("sweep-power", parents=[common], help="mean rate versus transmit power")
    sp.add_argument("--p-list", type=_number_list, help="dBm grid, e.g. -5:5:25 or 0,10,20")
    se = sub.add_parser("sweep-elements", parents=[common], help="mean rate versus IRS size")
    se.add_argument("--n-list", type=_number_list, help="e.g. 0:20:100 or 0,8,32")
    se.add_argument("--p-dbm", type=float, default=5.0, help="fixed transmit power")
    ve = sub.add_parser("verify", help="run the property and oracle suite")
    ve.add_argument("--quick", action="store_true", help="skip the full-scale checks")
    return parser


def _emit(args, header, columns, rows) -> None:
    writer = write_json if args.json else write_csv
    with contextlib.ExitStack() as stack:
        stream = stack.enter_context(open(args.out, "w", newline="")) if args.out else sys.stdout
        writer(stream, header, columns, rows)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        results = run_all(quick=args.quick, echo=lambda s: print(s, flush=True))
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        return 1 if failed else 0

    if args.trials < 1 or args.workers < 1:
        print("irsopt: --trials and --workers must be positive", file=sys.stderr)
        return 2
    try:
        raw = _load_raw(args.config)
        settings = build_settings(args, raw)
    except (OSError, ValueError) as exc:
        print(f"irsopt: {exc}", file=sys.stderr)
        return 2

    if args.command == "convergence":
        _emit(args, settings.header("convergence"), CONVERGENCE_COLUMNS, convergence_rows(settings))
    elif args.command == "sweep-power":
        p_list = args.p_list or raw.get("p_list_dbm") or DEFAULT_P_LIST
        rows = sweep_power_rows(settings, p_list)
        _emit(args, settings.header("sweep-power", {"p_list_dbm": " ".join(map(str, p_list))}),
              SWEEP_COLUMNS, rows)
    else:
        n_list = [int(n) for n in (args.n_list or raw.get("n_list") or DEFAULT_N_LIST)]
        rows = sweep_elements_rows(settings, n_list, args.p_dbm)
        _emit(args, settings.header("sweep-elements", {"n_list": " ".join(map(str, n_list)),
                                                       "P_dBm": args.p_dbm}),
              SWEEP_COLUMNS, rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
