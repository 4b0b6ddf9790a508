"""``ssopga`` command-line entry point.

Exit codes: 0 success, 1 property-suite failure, 2 usage error, 3 I/O or
parse error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import checks
from .multimodal import MultiModalModel, solve_multimodal
from .objectives import LinearInverseProblem, make_scalar_benchmark
from .plot import plot_traces
from .presets import PRESETS, UnknownPresetError, run_preset
from .solvers import SolverConfig, TraceParseError, run

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_OUT = "ssopga-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits on its own; surface usage problems as exceptions instead
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_out():
    return os.environ.get("SSOPGA_OUT") or DEFAULT_OUT


def build_parser():
    p = _Parser(prog="ssopga", description="SSO-PGA solvers and benchmark presets")
    p.add_argument("--seed", type=int, default=0, help="seed for every randomised suite (default 0)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    b = sub.add_parser("bench", help="run a named preset")
    b.add_argument("preset")
    b.add_argument("--out", default=None, help="output root (default $SSOPGA_OUT or ./ssopga-out)")
    b.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("solve", help="run one solver configuration")
    s.add_argument("--config", required=True, help="JSON file with SolverConfig fields")
    s.add_argument("--y0", required=True, help="comma-separated start vector, or a file holding one")
    s.add_argument("--problem", default="I", help="scalar benchmark id or problem JSON path (default I)")
    s.add_argument("--out", default=None, help="trace CSV path (default: stdout)")

    pl = sub.add_parser("plot", help="render trace CSVs to SVG")
    pl.add_argument("--out", required=True)
    pl.add_argument("traces", nargs="*")

    sub.add_parser("presets", help="list preset names")
    sub.add_parser("verify", help="run the property suites")
    return p


def _parse_vector(text):
    path = Path(text)
    if path.is_file():
        text = path.read_text()
    try:
        vals = [float(v) for v in text.replace("\n", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--y0: {exc}") from None
    if not vals:
        raise UsageError("--y0 is empty")
    return np.array(vals)


def _load_problem(spec):
    path = Path(spec)
    if not path.suffix == ".json":
        try:
            return make_scalar_benchmark(spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    doc = json.loads(path.read_text())
    if "K" in doc:
        return MultiModalModel.from_dict(doc)
    return LinearInverseProblem.from_dict(doc)


def _cmd_solve(args, out, err):
    try:
        doc = json.loads(Path(args.config).read_text())
        config = SolverConfig.from_dict(doc)
    except (OSError, json.JSONDecodeError) as exc:
        err.write(f"error: cannot read config {args.config}: {exc}\n")
        return EXIT_IO
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    y0 = _parse_vector(args.y0)
    problem = _load_problem(args.problem)
    try:
        if isinstance(problem, MultiModalModel):
            h = problem.dim_H
            res = solve_multimodal(problem, y0[:h], y0[h:], config.max_iters, config.tolerance)
            trace = res.to_trace(problem)
        else:
            trace = run(config, problem, y0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = trace.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    err.write(f"{trace.stop_reason.value} after {trace.n_iter} iterations, energy {trace.energies[-1]!r}\n")
    return EXIT_OK


def _dispatch(args, out, err):
    if args.command == "presets":
        for name, preset in PRESETS.items():
            out.write(f"{name}\t{preset.description}\n")
        return EXIT_OK
    if args.command == "verify":
        results = checks.run_all(args.seed)
        for r in results:
            out.write(r.line() + "\n")
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED
    if args.command == "bench":
        if args.preset not in PRESETS:
            raise UnknownPresetError(args.preset)
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        root = args.out or _default_out()
        summary = run_preset(args.preset, root, seed=args.seed, jobs=args.jobs)
        out.write(f"{args.preset}: {len(summary.rows)} cells -> {Path(root) / args.preset}\n")
        return EXIT_OK
    if args.command == "plot":
        if not args.traces:
            raise UsageError("plot needs at least one trace file")
        plot_traces(args.traces, args.out)
        return EXIT_OK
    if args.command == "solve":
        return _cmd_solve(args, out, err)
    raise UsageError("a subcommand is required (bench, solve, plot, presets, verify)")


def main(argv=None, *, stdout=None, stderr=None):
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args, out, err)
    except UsageError as exc:
        err.write(f"{exc}\n")
        err.write(parser.format_usage())
        return EXIT_USAGE
    except UnknownPresetError as exc:
        err.write(f"error: unknown preset {exc.args[0]!r}; run 'ssopga presets'\n")
        return EXIT_USAGE
    except TraceParseError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_IO
    except (OSError, json.JSONDecodeError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
