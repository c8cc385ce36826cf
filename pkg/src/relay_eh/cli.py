"""Command-line front end: ``relay-eh solve | sweep | validate``.

Exit codes: 0 ok, 1 usage or input error, 2 solver did not converge,
3 invariant violated.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from .closed_form import verify_structure
from .dispatch import ALGORITHMS, solve
from .model import SystemParams
from .solution import SolveReport
from .sweep import (
    AXES,
    MONOTONE_TOL,
    SWEEP_ALGORITHMS,
    SweepConfig,
    format_csv,
    monotone_violations,
    render_svg,
    run_sweep,
    thread_count,
)
from .validation import run_validation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2
EXIT_INVARIANT = 3

# flag name -> (SystemParams field, type)
PARAM_FLAGS = {
    "b": ("bandwidth", float),
    "n": ("phases", int),
    "gamma1": ("snr1", float),
    "gamma2": ("snr2", float),
    "beta": ("harvest", float),
    "p10": ("initial1", float),
    "p20": ("initial2", float),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; 2 means non-convergence here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path: str) -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{num}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _setting(args, config, key, cast, default=None):
    """Flag value if given, else config value, else ``default``."""
    value = getattr(args, key, None)
    if value is None and key in config:
        try:
            value = cast(config[key])
        except ValueError:
            raise UsageError(f"config value for {key!r} is not a valid {cast.__name__}: {config[key]!r}") from None
    return default if value is None else value


def _flag(args, config, key) -> bool:
    value = getattr(args, key, None)
    if value is None:
        value = config.get(key, "").lower() in ("1", "true", "yes", "on")
    return bool(value)


def _params(args, config, skip=()) -> SystemParams:
    defaults = SystemParams()
    fields = {}
    for flag, (name, cast) in PARAM_FLAGS.items():
        if flag in skip:
            continue
        fields[name] = _setting(args, config, flag, cast, getattr(defaults, name))
    try:
        return SystemParams(**fields)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system parameters")
    g.add_argument("--n", type=int, help="number of phases N (default 1)")
    g.add_argument("--gamma1", type=float, help="SN-RN SNR per unit power (default 1)")
    g.add_argument("--gamma2", type=float, help="RN-DN SNR per unit power (default 1)")
    g.add_argument("--beta", type=float, help="harvesting gain (default 0)")
    g.add_argument("--p10", type=float, help="SN initial storage (default 1)")
    g.add_argument("--p20", type=float, help="RN initial storage (default 1)")
    g.add_argument("--b", type=float, help="bandwidth B (default 1)")
    p.add_argument("--config", help="key = value file; flags override it")


def _num(x: float) -> str:
    return format(float(x), ".12g")


def _report_dict(params: SystemParams, rep: SolveReport, checks) -> dict:
    reg = rep.regime
    d = rep.diagnostics
    dec = rep.decomposition
    return {
        "algorithm": rep.algorithm,
        "params": {flag: getattr(params, name) for flag, (name, _) in PARAM_FLAGS.items()},
        "regime": {
            "label": str(reg.label),
            "gamma_prime": reg.gamma_prime,
            "beta_prime": reg.beta_prime,
            "gamma2_prime": reg.gamma2_prime,
            "threshold": reg.threshold,
        },
        "throughput": rep.throughput,
        "status": str(rep.status),
        "diagnostics": {
            "iterations": d.iterations,
            "objective": d.objective,
            "max_violation": d.max_violation,
            "stationarity": d.stationarity,
        },
        "schedule": rep.schedule.powers.tolist(),
        "decomposition": {
            "data": dec.data.tolist(),
            "supplement": dec.supplement.tolist(),
            "alpha1": dec.agg1,
            "alpha2": dec.agg2,
        },
        "slack1": rep.feasibility.slack1.tolist(),
        "slack2": rep.feasibility.slack2.tolist(),
        "feasible": rep.feasibility.feasible,
        "variables": rep.variables,
        "checks": [
            {"prop": c.prop, "holds": c.holds, "witness": c.witness, "tol": c.tol, "detail": c.detail}
            for c in checks
        ],
    }


def _report_text(params: SystemParams, rep: SolveReport, checks) -> str:
    reg = rep.regime
    d = rep.diagnostics
    lines = [f"algorithm   {rep.algorithm}"]
    regime = str(reg.label)
    if reg.label.is_low_product:
        regime += (
            f" (gamma'={_num(reg.gamma_prime)} beta'={_num(reg.beta_prime)}"
            f" gamma2'={_num(reg.gamma2_prime)} threshold={_num(reg.threshold)})"
        )
    lines.append(f"regime      {regime}")
    lines.append(f"throughput  {_num(rep.throughput)}")
    lines.append(
        f"status      {rep.status} (iterations {d.iterations}, violation {d.max_violation:.3g},"
        f" stationarity {d.stationarity:.3g})"
    )
    lines.append("")
    lines.append(f"{'phase':>5} {'P1':>14} {'P2':>14} {'p1':>14} {'p2':>14} {'a1':>14} {'a2':>14} {'slack1':>14} {'slack2':>14}")
    s = rep.schedule.powers
    dec = rep.decomposition
    f = rep.feasibility
    for j in range(params.phases):
        row = (s[0, j], s[1, j], dec.data[0, j], dec.data[1, j], dec.supplement[0, j], dec.supplement[1, j], f.slack1[j], f.slack2[j])
        lines.append(f"{j + 1:>5} " + " ".join(f"{v:>14.8g}" for v in row))
    lines.append(f"feasible    {'yes' if f.feasible else 'no'} (worst violation {max(f.max_violation, 0.0) + 0.0:.3g})")
    if checks:
        lines.append("")
        lines.append("structural checks")
        for c in checks:
            mark = "holds" if c.holds else f"FAILS at phase {c.witness}"
            lines.append(f"  {c.prop:<3} {mark:<18} {c.detail}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    config = read_config(args.config) if args.config else {}
    params = _params(args, config)
    alg = _setting(args, config, "alg", str, "opt")
    fmt = _setting(args, config, "format", str, "text")
    if alg not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}")
    if fmt not in ("text", "json"):
        raise UsageError(f"unknown format {fmt!r}")
    try:
        rep = solve(params, alg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    checks = verify_structure(params, rep) if alg != "oracle" else []
    if fmt == "json":
        sys.stdout.write(json.dumps(_report_dict(params, rep, checks), indent=2) + "\n")
    else:
        sys.stdout.write(_report_text(params, rep, checks))
    return EXIT_OK if rep.diagnostics.converged else EXIT_NONCONVERGED


def parse_values(text: str) -> List[float]:
    """``a,b,c`` or ``start:step:stop`` (stop included when hit within rounding)."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0:
                raise UsageError("range step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            # round away representation noise of start + k*step
            return [float(np.round(start + k * step, 12)) for k in range(max(count, 0))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse axis values {text!r}") from None


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def cmd_sweep(args) -> int:
    config = read_config(args.config) if args.config else {}
    axis = _setting(args, config, "axis", str)
    if axis is None:
        raise UsageError("--axis is required")
    if axis not in AXES:
        raise UsageError(f"unknown axis {axis!r}; choose from {', '.join(AXES)}")
    values = parse_values(_setting(args, config, "values", str, ""))
    algs = [a.strip() for a in _setting(args, config, "alg", str, "opt").split(",") if a.strip()]
    skip = [f for f, (name, _) in PARAM_FLAGS.items() if name == AXES[axis]]
    base = _params(args, config, skip=skip)
    try:
        cfg = SweepConfig(
            axis,
            tuple(values),
            base,
            tuple(algs),
            _setting(args, config, "csv", str),
            _setting(args, config, "svg", str),
        )
        threads = thread_count()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = run_sweep(cfg, threads=threads, timing=_flag(args, config, "timing"))
    text = format_csv(rows)
    if cfg.csv_path:
        _write(cfg.csv_path, text)
    else:
        sys.stdout.write(text)
    if cfg.svg_path:
        _write(cfg.svg_path, render_svg(rows, axis))
    status = EXIT_OK
    if any(r.status != "Converged" for r in rows):
        status = EXIT_NONCONVERGED
    if _flag(args, config, "check_monotone") and "opt" in cfg.algorithms:
        bad = monotone_violations(rows, "opt", MONOTONE_TOL)
        for a, b, drop in bad:
            sys.stderr.write(f"monotonicity violated: opt drops by {drop:.3g} from {axis}={_num(a)} to {axis}={_num(b)}\n")
        if bad:
            status = EXIT_INVARIANT
    return status


def cmd_validate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if not 1 <= args.n_max <= 3:
        raise UsageError("--n-max must be between 1 and 3 (grid oracle limit)")
    rep = run_validation(args.seed, args.trials, args.n_max, inject_fault=args.inject_fault)
    sys.stdout.write(rep.render())
    return EXIT_OK if rep.ok else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relay-eh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance")
    _add_param_flags(p)
    p.add_argument("--alg", help=f"one of {', '.join(ALGORITHMS)} (default opt)")
    p.add_argument("--format", help="text (default) or json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="sweep one parameter and write CSV/SVG")
    _add_param_flags(p)
    p.add_argument("--axis", help=f"one of {', '.join(AXES)}")
    p.add_argument("--values", help="comma list or start:step:stop")
    p.add_argument("--alg", help=f"comma list from {', '.join(SWEEP_ALGORITHMS)} (default opt)")
    p.add_argument("--csv", help="CSV output path (default stdout)")
    p.add_argument("--svg", help="SVG chart output path")
    p.add_argument("--check-monotone", action="store_true", default=None, help="exit 3 if opt decreases along the axis")
    p.add_argument("--timing", action="store_true", default=None, help="fill the ms column (output no longer reproducible)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="cross-check solvers and oracle on random draws")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=50, help="draws per regime")
    p.add_argument("--n-max", type=int, default=2, help="largest N drawn (at most 3)")
    p.add_argument("--inject-fault", action="store_true", help="harness self-test: corrupt solver output")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"relay-eh: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
