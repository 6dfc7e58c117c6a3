"""Command-line front end: ``numindex {norm,radius,index,verify,sweep}``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import numrange as nr
from . import verify as vf
from .errors import DimensionError, NonAbsoluteError, OrthogonalityError, UnsupportedKindError
from .spaces import NormSpace, from_dict, lorentz_xp, lp, parse_space, section
from .svg import line_plot

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    out: Path | None = None
    quiet: bool = False
    options: dict[str, Any] = field(default_factory=dict)


def fmt(x: float) -> str:
    return f"{x:.12f}"


def load_space(arg: str) -> NormSpace:
    """A JSON descriptor file, or a shorthand name such as ``linf^2`` when no such file exists."""
    path = Path(arg)
    if path.exists():
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{arg}: malformed JSON ({exc})") from None
        return from_dict(doc)
    try:
        return parse_space(arg)
    except ValueError:
        raise InputError(f"{arg}: no such file and not a known space name") from None


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace(" ", "").split(",") if v != ""])
    except ValueError:
        raise InputError(f"cannot parse vector {text!r}; expected comma-separated numbers") from None


def parse_p_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"--p-range must look like a:b:steps, got {text!r}")
    try:
        a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError(f"--p-range must look like a:b:steps, got {text!r}") from None
    if steps < 1 or b < a or a < 1:
        raise InputError(f"empty or invalid p range {text!r}")
    return np.linspace(a, b, steps) if steps > 1 else np.array([a])


def _emit(cfg: RunConfig, text: str) -> None:
    if not cfg.quiet:
        print(text)


# -- subcommands ----------------------------------------------------------------

def cmd_norm(cfg: RunConfig, space: str, vector: str) -> int:
    X = load_space(space)
    x = parse_vector(vector)
    print(fmt(X.norm(x)))
    return EXIT_OK


def cmd_radius(cfg: RunConfig, space: str, operator: str, exact: bool, samples: int | None) -> int:
    X = load_space(space)
    T = nr.load_operator(operator)
    if exact:
        est = nr.numerical_radius_exact(X, T)
    elif samples is not None:
        est = nr.numerical_radius_sampled(X, T, samples, cfg.seed)
    else:
        est = nr.numerical_radius(X, T, seed=cfg.seed)
    print(fmt(est.value))
    _emit(cfg, f"method {est.method}")
    _emit(cfg, "witness_x " + ",".join(fmt(v) for v in est.witness.x))
    _emit(cfg, "witness_f " + ",".join(fmt(v) for v in est.witness.f))
    return EXIT_OK


def cmd_index(cfg: RunConfig, space: str, restarts: int) -> int:
    X = load_space(space)
    est = nr.numerical_index(X, restarts=restarts, seed=cfg.seed)
    print(f"lower {fmt(est.lower)}")
    print(f"upper {fmt(est.upper)}")
    print(f"certificate {est.certificate}")
    _emit(cfg, f"method {est.method}")
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        nr.save_operator(est.witness, cfg.out / "witness.csv")
        doc = {"space": X.to_dict(), **est.to_dict()}
        (cfg.out / "index.json").write_text(json.dumps(vf._jsonable(doc), indent=1, sort_keys=True) + "\n")
        _emit(cfg, f"witness written to {cfg.out / 'witness.csv'}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, suite: str, timings: bool) -> int:
    try:
        scenarios = vf.load_suite(suite)
    except FileNotFoundError:
        raise InputError(f"{suite}: no such suite file (bundled suites: {', '.join(vf.bundled_suites())})") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{suite}: malformed JSON ({exc})") from None
    reports = vf.run_suite(scenarios, seed=cfg.seed if cfg.options.get("seed_given") else None)
    out = cfg.out or Path("numindex-report")
    csv_path, json_path = vf.write_reports(reports, out, timings=timings)
    failed = 0
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        _emit(cfg, f"{status} {rep.id}")
        for aid in rep.failing():
            failed += 1
            print(f"FAIL {rep.id} {aid}", file=sys.stderr)
    _emit(cfg, f"{sum(r.passed for r in reports)}/{len(reports)} scenarios passed; report {csv_path}")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def sweep_spaces(family: str, p: float, dim: int) -> NormSpace:
    if family == "lp":
        return lp(dim, p)
    if dim == 3:
        return lorentz_xp(p)
    if dim == 2:
        return section(lorentz_xp(p), [0, 1])
    raise InputError("the lorentz family has dimensions 2 (the section) and 3")


def cmd_sweep(cfg: RunConfig, family: str, p_range: str, dims: str, restarts: int) -> int:
    ps = parse_p_range(p_range)
    try:
        dim_list = [int(d) for d in dims.split(",") if d.strip()]
    except ValueError:
        raise InputError(f"cannot parse --dims {dims!r}") from None
    if not dim_list or min(dim_list) < 1:
        raise InputError("--dims must list positive integers")
    rows, series = [], {}
    for d in dim_list:
        xs, ys = [], []
        for p in ps:
            X = sweep_spaces(family, float(p), d)
            est = nr.numerical_index(X, restarts=restarts, seed=cfg.seed)
            rows.append([family, repr(float(p)), d, repr(est.lower), repr(est.upper), est.certificate])
            xs.append(float(p))
            ys.append(est.upper)
            _emit(cfg, f"{family} p={p:g} dim={d} lower={fmt(est.lower)} upper={fmt(est.upper)}")
        series[f"dim {d}"] = (xs, ys)
    out = cfg.out or Path("numindex-sweep")
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "p", "dim", "lower", "upper", "certificate"])
    w.writerows(rows)
    (out / f"sweep_{family}.csv").write_text(buf.getvalue())
    svg = line_plot(series, title=f"numerical index estimates, {family} family", xlabel="p",
                    ylabel="upper estimate of n")
    (out / f"sweep_{family}.svg").write_text(svg)
    _emit(cfg, f"wrote {out / f'sweep_{family}.csv'} and {out / f'sweep_{family}.svg'}")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------

def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not overwrite a flag given before the subcommand
    dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--seed", type=int, default=dflt(None), help="random seed (default 0)")
    flags.add_argument("--out", type=Path, default=dflt(None), help="output directory")
    flags.add_argument("--quiet", action="store_true", default=dflt(False), help="print results only")
    return flags


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="numindex", parents=[_global_flags(suppress=False)],
                                     description="Numerical radius and numerical index of finite-dimensional "
                                                 "real normed spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="evaluate a norm")
    p.add_argument("space", help="space descriptor file (JSON) or shorthand name")
    p.add_argument("vector", help="comma-separated coordinates, e.g. 1,1,1")

    p = sub.add_parser("radius", parents=[common], help="numerical radius of an operator")
    p.add_argument("space")
    p.add_argument("operator", help="operator file: CSV rows without header, or JSON array")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="vertex enumeration (polytopal balls only)")
    g.add_argument("--samples", type=int, default=None, help="sampled estimate with N points")

    p = sub.add_parser("index", parents=[common], help="numerical index estimate with witness")
    p.add_argument("space")
    p.add_argument("--restarts", type=int, default=64)

    p = sub.add_parser("verify", parents=[common], help="run a scenario suite")
    p.add_argument("suite", help="suite JSON file or bundled suite name (paper-core)")
    p.add_argument("--timings", action="store_true", help="fill the runtime_ms column (not byte-stable)")

    p = sub.add_parser("sweep", parents=[common], help="index estimates over a range of p")
    p.add_argument("--family", choices=("lp", "lorentz"), required=True)
    p.add_argument("--p-range", required=True, help="a:b:steps, evenly spaced and inclusive")
    p.add_argument("--dims", default="2,3")
    p.add_argument("--restarts", type=int, default=4)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(args.command, seed=args.seed if args.seed is not None else 0, out=args.out,
                    quiet=args.quiet, options={"seed_given": args.seed is not None})
    try:
        if args.command == "norm":
            return cmd_norm(cfg, args.space, args.vector)
        if args.command == "radius":
            if args.samples is not None and args.samples < 1:
                raise InputError("--samples must be at least 1")
            return cmd_radius(cfg, args.space, args.operator, args.exact, args.samples)
        if args.command == "index":
            if args.restarts < 1:
                raise InputError("--restarts must be at least 1")
            return cmd_index(cfg, args.space, args.restarts)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite, args.timings)
        if args.command == "sweep":
            if args.restarts < 1:
                raise InputError("--restarts must be at least 1")
            return cmd_sweep(cfg, args.family, args.p_range, args.dims, args.restarts)
    except (InputError, FileNotFoundError, DimensionError, UnsupportedKindError, NonAbsoluteError,
            OrthogonalityError, ValueError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"numindex: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
