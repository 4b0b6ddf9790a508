"""Named benchmark experiments and the grid runner behind ``ssopga bench``."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .multimodal import make_consistent_toy, solve_multimodal
from .objectives import (
    MINIMIZERS,
    LinearInverseProblem,
    make_scalar_benchmark,
    spectral_norm,
)
from .solvers import (
    CertificationError,
    Method,
    SolverConfig,
    StopReason,
    check_monotone,
    detect_oscillation,
    run,
)

SUMMARY_HEADER = (
    "method",
    "alpha",
    "learning_rate",
    "clip",
    "y0",
    "iters_to_tol",
    "final_energy",
    "final_iterate",
    "stop_reason",
)
FIG_LEARNING_RATES = (0.0005, 0.005)
FIG_INITS = (1.0, 4.0, 8.0, 16.0)
APPENDIX_LEARNING_RATES = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 5e-1, 1.0, 10.0)
CELL_BUDGET = 50_000
# distance to the known minimizer counted as "reached"
SUMMARY_TOL = 1e-3
SCALAR_TOL = 1e-15
DNF = "DNF"


class UnknownPresetError(KeyError):
    pass


@dataclass
class Cell:
    """One grid cell: a solver configuration run from one start point."""

    config: SolverConfig
    problem: object
    y0: np.ndarray
    label: str
    target: np.ndarray | None = None
    kind: str = "solver"
    extra: dict = field(default_factory=dict)

    @property
    def cell_id(self):
        c = self.config
        clip = "none" if c.clip is None else f"{c.clip:g}"
        base = f"{c.method.value}_a{c.alpha:g}_lr{c.learning_rate:g}_clip{clip}"
        if c.gradient_scale != 1.0:
            base += f"_scale{c.gradient_scale:g}"
        if c.method is Method.LEE_SEUNG:
            base += f"_eps{c.epsilon:g}"
        return f"{base}_y0-{self.label}"

    def sort_key(self, rank):
        c = self.config
        return (rank[self.config.method.value], c.clip or 0.0, c.epsilon, c.learning_rate, self.y0_key)

    @property
    def y0_key(self):
        try:
            return (0, float(self.label), "")
        except ValueError:
            return (1, 0.0, self.label)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    build: Callable[[int], list]
    method_order: tuple = ("SSO_PGA", "PGA", "LEE_SEUNG")


def _scalar_grid(problem, target, alpha, lrs, inits=FIG_INITS, *, clips=(None,), pga=True, osc=None):
    cells = []
    for lr in lrs:
        for y0 in inits:
            for clip in clips:
                cfg = SolverConfig(
                    method=Method.SSO_PGA,
                    alpha=alpha,
                    learning_rate=lr,
                    clip=clip,
                    max_iters=CELL_BUDGET,
                    tolerance=SCALAR_TOL,
                    oscillation_window=osc,
                )
                cells.append(Cell(cfg, problem, np.array([y0]), f"{y0:g}", np.array([target])))
            if pga:
                cfg = SolverConfig(
                    method=Method.PGA, learning_rate=lr, max_iters=CELL_BUDGET, tolerance=SCALAR_TOL
                )
                cells.append(Cell(cfg, problem, np.array([y0]), f"{y0:g}", np.array([target])))
    return cells


def _fig(pid, alpha, lrs):
    def build(seed):
        return _scalar_grid(make_scalar_benchmark(pid), MINIMIZERS[pid], alpha, lrs)

    return build


def _limitation(seed):
    # the clipped cells also scale the gradient by the learning rate: at unit
    # scale y = 6 repels the multiplicative step whatever the clip
    problem = make_scalar_benchmark("I", center=6.0)
    cells = _scalar_grid(problem, 6.0, 0.0, FIG_LEARNING_RATES, osc=40)
    for lr in FIG_LEARNING_RATES:
        for y0 in FIG_INITS:
            cfg = SolverConfig(
                method=Method.SSO_PGA,
                learning_rate=lr,
                gradient_scale=lr,
                clip=0.1,
                max_iters=CELL_BUDGET,
                tolerance=SCALAR_TOL,
                oscillation_window=40,
            )
            cells.append(Cell(cfg, problem, np.array([y0]), f"{y0:g}", np.array([6.0])))
    return cells


def hazard_problem():
    """2x1 instance whose Lee-Seung update divides by zero on step two."""
    return LinearInverseProblem(np.array([[1.0], [0.0]]), np.array([0.0, 1.0]))


def _hazard(seed):
    p = hazard_problem()
    y0 = np.array([1.0])
    common = dict(max_iters=1000, tolerance=1e-12)
    return [
        Cell(SolverConfig(method=Method.LEE_SEUNG, epsilon=0.0, **common), p, y0, "1", extra={"epsilon": 0.0}),
        Cell(SolverConfig(method=Method.LEE_SEUNG, epsilon=1e-12, **common), p, y0, "1", extra={"epsilon": 1e-12}),
        Cell(SolverConfig(method=Method.SSO_PGA, alpha=0.0, **common), p, y0, "1"),
    ]


def random_descent_instance(rng, max_rows=50, max_cols=30):
    """Random non-negative least-squares instance with ``||H||_2 = 1``.

    Entries are uniform on [0, 1] before normalisation; the observation is
    generated from a ground truth in (0, 1].  Returns ``(problem, y0)``.
    """
    n = int(rng.integers(1, max_rows + 1))
    m = int(rng.integers(1, max_cols + 1))
    H = rng.uniform(0.0, 1.0, (n, m))
    H /= spectral_norm(H)
    y_true = 1.0 - rng.uniform(0.0, 1.0, m)
    y0 = 1.0 - rng.uniform(0.0, 1.0, m)
    return LinearInverseProblem(H, H @ y_true), y0


def _certified_random(seed, count=100):
    rng = np.random.default_rng(seed)
    cells = []
    for k in range(count):
        p, y0 = random_descent_instance(rng)
        cfg = SolverConfig(method=Method.SSO_PGA, alpha=0.0, max_iters=1000, tolerance=1e-15, certified=True)
        cells.append(Cell(cfg, p, y0, f"instance-{k:03d}"))
    return cells


def _multimodal(seed):
    model, H_star, T_star = make_consistent_toy(16, seed)
    cfg = SolverConfig(method=Method.SSO_PGA, alpha=0.0, max_iters=5000, tolerance=1e-14)
    y0 = np.full(model.dim_H + model.dim_T, 0.5)
    return [Cell(cfg, model, y0, "0.5", np.concatenate([H_star, T_star]), kind="multimodal")]


# The Problem II family runs at alpha = 1: with alpha = 0 the multiplier band
# reaches 0 and the l1 threshold then makes y = 0 absorbing.
PRESETS = {
    p.name: p
    for p in (
        ExperimentPreset("fig3-problem1", "Problem I, inits {1,4,8,16}, lr {5e-4, 5e-3}", _fig("I", 0.0, FIG_LEARNING_RATES)),
        ExperimentPreset("fig4-problem2", "Problem II, inits {1,4,8,16}, lr {5e-4, 5e-3}", _fig("II", 1.0, FIG_LEARNING_RATES)),
        ExperimentPreset("appendix-p1", "Problem I learning-rate sweep", _fig("I", 0.0, APPENDIX_LEARNING_RATES)),
        ExperimentPreset("appendix-p1plus", "Problem I+ learning-rate sweep", _fig("I+", 0.0, APPENDIX_LEARNING_RATES)),
        ExperimentPreset("appendix-p2", "Problem II learning-rate sweep", _fig("II", 1.0, APPENDIX_LEARNING_RATES)),
        ExperimentPreset("appendix-p2plus", "Problem II+ learning-rate sweep", _fig("II+", 1.0, APPENDIX_LEARNING_RATES)),
        ExperimentPreset("limitation-min6", "optimum at 6: SSO-PGA with and without gradient clipping vs PGA", _limitation),
        ExperimentPreset("theorem2-random", "100 certified runs on random non-negative inverse problems", _certified_random),
        ExperimentPreset("leeseung-hazard", "division-by-zero instance: Lee-Seung vs SSO-PGA", _hazard),
        ExperimentPreset("multimodal-toy", "alternating updates on a consistent 16-dim instance", _multimodal),
    )
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownPresetError(name) from None


# ---------------------------------------------------------------- running


def iters_to_target(trace, target, tol=SUMMARY_TOL):
    """First recorded iteration within ``tol`` (max-norm) of ``target``."""
    if target is None or not trace.store_iterates:
        return None
    for t, y in zip(trace.iters, trace.iterates):
        if np.isfinite(y).all() and float(np.abs(y - target).max()) <= tol:
            return t
    return None


def _fmt(v):
    # shortest round-trip representation
    return repr(float(v))


def _fmt_vector(v):
    v = np.asarray(v, dtype=float)
    if v.size <= 8:
        return ";".join(_fmt(x) for x in v)
    return _fmt(np.abs(v).max())


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _execute(cell):
    extra = dict(cell.extra)
    if cell.kind == "multimodal":
        model = cell.problem
        h = model.dim_H
        res = solve_multimodal(model, cell.y0[:h], cell.y0[h:], cell.config.max_iters, cell.config.tolerance)
        trace = res.to_trace(model)
        scale = max(1.0, res.objectives[0])
        extra["monotone_violations"] = len(check_monotone(res.objectives, rtol=0.0, atol=1e-10 * scale))
        return trace, extra
    try:
        trace = run(cell.config, cell.problem, cell.y0)
    except CertificationError as exc:
        trace = exc.trace
        extra["certification_error"] = str(exc)
    if cell.config.certified:
        extra["monotone_violations"] = len(check_monotone(trace))
    if cell.config.oscillation_window or trace.stop_reason is StopReason.MAX_ITERS:
        extra["oscillating"] = detect_oscillation(trace, cell.config.oscillation_window or 40)
    return trace, extra


def _run_cell(args):
    cell, trace_dir = args
    trace, extra = _execute(cell)
    path = Path(trace_dir) / f"{cell.cell_id}.csv"
    _atomic_write(path, trace.to_csv())
    hit = iters_to_target(trace, cell.target)
    if cell.target is None:
        hit = trace.n_iter if trace.stop_reason is StopReason.CONVERGED else None
    c = cell.config
    row = {
        "method": c.method.value if cell.kind == "solver" else "SSO_PGA_MULTIMODAL",
        "alpha": _fmt(c.alpha),
        "learning_rate": _fmt(c.learning_rate),
        "clip": "" if c.clip is None else _fmt(c.clip),
        "y0": cell.label,
        "iters_to_tol": DNF if hit is None else str(hit),
        "final_energy": _fmt(trace.energies[-1]),
        "final_iterate": _fmt_vector(trace.final_iterate),
        "stop_reason": trace.stop_reason.value,
    }
    detail = {"trace": str(path.name), "iterations": trace.n_iter, "gradient_scale": c.gradient_scale}
    return row, {**detail, **extra}


@dataclass
class ComparisonSummary:
    preset: str
    rows: list
    details: list
    seed: int

    def to_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SUMMARY_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()

    def to_json(self):
        cells = [dict(row, **detail) for row, detail in zip(self.rows, self.details)]
        doc = {"preset": self.preset, "seed": self.seed, "cells": cells}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_preset(name, out_dir, *, seed=0, jobs=1):
    """Run every cell of a preset and write traces plus summaries.

    Layout: ``out_dir/<name>/traces/<cell>.csv``, ``summary.csv`` and
    ``summary.json``.  Returns the :class:`ComparisonSummary`.
    """
    preset = get_preset(name)
    rank = {m: i for i, m in enumerate(preset.method_order)}
    cells = sorted(preset.build(seed), key=lambda c: c.sort_key(rank))
    root = Path(out_dir) / name
    trace_dir = root / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    work = [(c, str(trace_dir)) for c in cells]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, work))
    else:
        results = [_run_cell(w) for w in work]
    summary = ComparisonSummary(name, [r for r, _ in results], [d for _, d in results], seed)
    _atomic_write(root / "summary.csv", summary.to_csv())
    _atomic_write(root / "summary.json", summary.to_json())
    if cells and cells[0].kind == "multimodal":
        cells[0].problem.to_json(root / "instance.json")
    return summary
