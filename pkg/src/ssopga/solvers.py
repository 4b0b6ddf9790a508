"""Iterative solvers: SSO-PGA, classical PGA and the Lee-Seung baseline.

All three share :func:`run`, which records an :class:`IterationTrace` and
applies the same stopping rules, so traces from different methods are
directly comparable.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._validation import as_vector, check_nonnegative, check_positive_scalar
from .objectives import LinearInverseProblem, as_objective
from .sso import SlidingSigmoid

TRACE_HEADER = (
    "iter",
    "energy",
    "grad_inf_norm",
    "iterate_inf_norm",
    "mult_min",
    "mult_max",
    "stop_reason",
)
# traces of problems at most this wide carry the whole iterate in CSV
CSV_FULL_VECTOR_DIM = 8


class Method(str, Enum):
    SSO_PGA = "SSO_PGA"
    PGA = "PGA"
    LEE_SEUNG = "LEE_SEUNG"


class StopReason(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    NONFINITE = "nonfinite"
    OSCILLATION = "oscillation_detected"


class CertificationError(RuntimeError):
    """The sliding parameter left the guaranteed-descent range mid-run."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class TraceParseError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters shared by every method.

    ``learning_rate`` is the PGA step size.  SSO-PGA instead feeds
    ``gradient_scale * grad`` (optionally clipped to ``[-clip, clip]``) to the
    operator; the default scale of 1 is the unscaled update.  ``epsilon``
    stabilises the Lee-Seung denominator.
    """

    method: Method = Method.SSO_PGA
    alpha: float = 0.0
    learning_rate: float = 1e-3
    max_iters: int = 1000
    tolerance: float = 1e-10
    clip: float | None = None
    epsilon: float = 0.0
    gradient_scale: float = 1.0
    certified: bool = False
    oscillation_window: int | None = None
    store_dim_cap: int = 256

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        SlidingSigmoid(self.alpha)
        check_positive_scalar(self.learning_rate, "learning_rate")
        check_positive_scalar(self.tolerance, "tolerance")
        check_positive_scalar(self.gradient_scale, "gradient_scale")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if self.clip is not None:
            check_positive_scalar(self.clip, "clip")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon!r}")
        if self.oscillation_window is not None and self.oscillation_window < 4:
            raise ValueError("oscillation_window must be at least 4")

    def to_dict(self):
        d = asdict(self)
        d["method"] = self.method.value
        return d

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**doc)


class Violation(NamedTuple):
    index: int
    previous: float
    current: float


@dataclass
class IterationTrace:
    """Per-iteration record of a run; row 0 is the initial state."""

    method: str
    dimension: int
    store_iterates: bool = True
    iters: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    grad_inf: list = field(default_factory=list)
    iterate_inf: list = field(default_factory=list)
    mult_min: list = field(default_factory=list)
    mult_max: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    stop_reason: StopReason | None = None
    final_iterate: np.ndarray | None = None

    def record(self, t, y, energy, grad, mult=None):
        self.iters.append(t)
        self.energies.append(float(energy))
        self.grad_inf.append(_inf_norm(grad))
        self.iterate_inf.append(_inf_norm(y))
        if mult is None:
            self.mult_min.append(math.nan)
            self.mult_max.append(math.nan)
        else:
            self.mult_min.append(float(mult.min()))
            self.mult_max.append(float(mult.max()))
        if self.store_iterates:
            self.iterates.append(np.array(y, dtype=float))
        self.final_iterate = np.array(y, dtype=float)

    def __len__(self):
        return len(self.iters)

    @property
    def n_iter(self):
        return self.iters[-1] if self.iters else 0

    def energy_array(self):
        return np.asarray(self.energies, dtype=float)

    def iterate_array(self):
        if not self.store_iterates:
            raise ValueError("trace was recorded without full iterates")
        return np.vstack(self.iterates)

    def to_csv(self, path=None):
        """Write the trace as CSV; returns the text when ``path`` is None."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        full = self.store_iterates and self.dimension <= CSV_FULL_VECTOR_DIM
        last = len(self.iters) - 1
        for k, t in enumerate(self.iters):
            it = ";".join(_fmt(v) for v in self.iterates[k]) if full else _fmt(self.iterate_inf[k])
            reason = self.stop_reason.value if (k == last and self.stop_reason) else ""
            w.writerow(
                [
                    t,
                    _fmt(self.energies[k]),
                    _fmt(self.grad_inf[k]),
                    it,
                    _fmt_optional(self.mult_min[k]),
                    _fmt_optional(self.mult_max[k]),
                    reason,
                ]
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path, method=""):
        """Parse a trace CSV written by :meth:`to_csv`."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise TraceParseError(path, 0, f"cannot read: {exc.strerror}") from None
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != TRACE_HEADER:
            raise TraceParseError(path, 1, "missing or malformed header")
        if len(rows) < 2:
            raise TraceParseError(path, 1, "no data rows")
        trace = None
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(TRACE_HEADER):
                raise TraceParseError(path, lineno, f"expected {len(TRACE_HEADER)} fields, got {len(row)}")
            try:
                t = int(row[0])
                energy = float(row[1])
                grad = float(row[2])
                vec = np.array([float(v) for v in row[3].split(";")])
                mmin = float(row[4]) if row[4] else math.nan
                mmax = float(row[5]) if row[5] else math.nan
                reason = StopReason(row[6]) if row[6] else None
            except ValueError as exc:
                raise TraceParseError(path, lineno, str(exc)) from None
            if trace is None:
                trace = cls(method=method, dimension=vec.size, store_iterates=True)
            trace.iters.append(t)
            trace.energies.append(energy)
            trace.grad_inf.append(grad)
            trace.iterate_inf.append(_inf_norm(vec))
            trace.mult_min.append(mmin)
            trace.mult_max.append(mmax)
            trace.iterates.append(vec)
            trace.final_iterate = vec
            if reason is not None:
                trace.stop_reason = reason
        return trace


def _inf_norm(v):
    v = np.asarray(v, dtype=float)
    if v.size == 1:
        return abs(float(v.flat[0]))
    if v.size == 0:
        return 0.0
    # nan propagates through max
    return float(np.abs(v).max())


def _fmt(v):
    return format(float(v), ".17g")


def _fmt_optional(v):
    return "" if math.isnan(v) else _fmt(v)


# ---------------------------------------------------------------- steps


def pga_step(objective, y, rho):
    """One proximal gradient step ``prox(y - rho grad, rho * weight)``."""
    obj = as_objective(objective)
    rho = check_positive_scalar(rho, "rho")
    y = as_vector(y, length=obj.dimension)
    g = obj.gradient(y)
    return _pga_update(obj, y, g, rho)


def _pga_update(obj, y, g, rho):
    v = y - rho * g
    if not obj.has_prox or not np.isfinite(v).all():
        return v
    return obj.prox(v, rho * obj.nonsmooth.weight)


def sso_pga_step(objective, y, op, *, gradient_scale=1.0, clip=None):
    """One SSO-PGA step ``prox(y * SSO(grad))``.

    ``op`` is a :class:`SlidingSigmoid` or a bare sliding parameter.  The
    soft-threshold of the composite case uses, per coordinate, the additive
    step the multiplicative update is equivalent to, so the fixed points are
    those of the composite problem.
    """
    obj = as_objective(objective)
    op = op if isinstance(op, SlidingSigmoid) else SlidingSigmoid(op)
    y = as_vector(y, length=obj.dimension)
    check_nonnegative(y)
    g = obj.gradient(y)
    return _sso_update(obj, y, g, op, gradient_scale, clip)[0]


def _sso_update(obj, y, g, op, scale, clip):
    if not np.isfinite(g).all():
        return np.full_like(y, np.nan), None
    z = scale * g
    if clip is not None:
        z = np.clip(z, -clip, clip)
    dev = op.deviation(z)
    mult = 1.0 + dev
    v = y * mult
    if obj.has_prox:
        # additive step equivalent to the multiplicative one: y*mult = y - rho*g
        nz = g != 0
        ratio = np.where(nz, z / np.where(nz, g, 1.0), scale)
        rho = y * op.theta(z) * ratio
        v = obj.prox(v, obj.nonsmooth.weight * rho)
    return v, mult


def lee_seung_step(problem, y, epsilon=0.0):
    """Multiplicative update ``y * (H^T x) / (H^T H y + epsilon)``.

    A zero denominator is deliberately left unmasked: the result is
    non-finite and the caller decides what to do.
    """
    if not isinstance(problem, LinearInverseProblem):
        raise TypeError("the Lee-Seung update needs a LinearInverseProblem")
    y = as_vector(y, length=problem.dimension)
    return _lee_seung_update(problem, y, epsilon)


def _lee_seung_update(problem, y, epsilon):
    H = problem.H
    num = H.T @ problem.x
    den = H.T @ (H @ y) + epsilon
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _lee_seung_raw(y, num, den)


def _lee_seung_raw(y, num, den):
    return y * num / den


# ---------------------------------------------------------------- driver


def _safe_eval(obj, y):
    # a non-finite iterate yields a non-finite energy, which stops the run
    if not np.isfinite(y).all():
        return math.nan, np.full_like(y, np.nan)
    return obj.evaluate(y)


def _linear_problem(obj):
    smooth = obj.smooth
    if not isinstance(smooth, LinearInverseProblem):
        return None
    return smooth


def run(config, problem, y0):
    """Iterate ``config.method`` from ``y0`` until a stopping rule fires.

    Stops when the objective changes by at most ``tol * max(1, E_prev)``, the
    iterate moves by at most ``tol`` in the max-norm, a non-finite value
    appears, an oscillation is detected (if a window is configured) or the
    iteration budget is spent.
    """
    if isinstance(config, dict):
        config = SolverConfig.from_dict(config)
    obj = as_objective(problem)
    y = as_vector(y0, "y0", length=obj.dimension, copy=True)
    method = config.method
    op = SlidingSigmoid(config.alpha)
    lsq = _linear_problem(obj)

    if method is not Method.PGA:
        check_nonnegative(y, "y0")
    if method is Method.LEE_SEUNG:
        if lsq is None:
            raise ValueError("the Lee-Seung baseline needs a linear inverse problem")
        if obj.has_prox:
            raise ValueError("the Lee-Seung baseline is run without a proximal term")
    if config.certified:
        if method is not Method.SSO_PGA or lsq is None or obj.has_prox:
            raise ValueError("certified runs need SSO-PGA on a linear inverse problem without prox")
        if config.clip is not None or config.gradient_scale != 1.0:
            raise ValueError("certified runs use the unscaled, unclipped update")

    trace = IterationTrace(
        method=method.value,
        dimension=obj.dimension,
        store_iterates=obj.dimension <= config.store_dim_cap,
    )
    energy, g = _safe_eval(obj, y)
    trace.record(0, y, energy, g)
    if not (math.isfinite(energy) and np.all(np.isfinite(g))):
        trace.stop_reason = StopReason.NONFINITE
        return trace

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _iterate(config, obj, lsq, op, trace, y, energy, g)


def _iterate(config, obj, lsq, op, trace, y, energy, g):
    method = config.method
    tol = config.tolerance
    for t in range(1, config.max_iters + 1):
        if config.certified:
            bound = lsq.alpha_upper_bound(y)
            if config.alpha > bound:
                raise CertificationError(
                    f"iteration {t}: alpha={config.alpha} exceeds the descent bound {bound:.6g}", trace
                )
        mult = None
        if method is Method.SSO_PGA:
            y_new, mult = _sso_update(obj, y, g, op, config.gradient_scale, config.clip)
        elif method is Method.PGA:
            y_new = _pga_update(obj, y, g, config.learning_rate)
        else:
            y_new = _lee_seung_raw(y, lsq.H.T @ lsq.x, lsq.H.T @ (lsq.H @ y) + config.epsilon)

        e_new, g_new = obj.evaluate(y_new)
        trace.record(t, y_new, e_new, g_new, mult)
        # nan and inf propagate into the recorded max-norm
        if not (math.isfinite(e_new) and math.isfinite(trace.grad_inf[-1])):
            trace.stop_reason = StopReason.NONFINITE
            return trace
        moved = float(np.abs(y_new - y).max())
        if abs(e_new - energy) <= tol * max(1.0, energy) or moved <= tol:
            trace.stop_reason = StopReason.CONVERGED
            return trace
        if config.oscillation_window and detect_oscillation(trace, config.oscillation_window, tol):
            trace.stop_reason = StopReason.OSCILLATION
            return trace
        y, energy, g = y_new, e_new, g_new

    trace.stop_reason = StopReason.MAX_ITERS
    return trace


# ---------------------------------------------------------------- diagnostics


def check_monotone(trace, *, rtol=1e-12, atol=1e-15):
    """Indices where the recorded objective increased beyond round-off."""
    energies = trace.energies if isinstance(trace, IterationTrace) else list(trace)
    out = []
    for t in range(1, len(energies)):
        prev, cur = energies[t - 1], energies[t]
        if cur > prev * (1 + rtol) + atol:
            out.append(Violation(t, prev, cur))
    return out


def detect_oscillation(trace, window=40, tolerance=1e-6):
    """Whether the last ``window`` steps keep reversing without settling.

    True when, over the window, the first differences of some coordinate
    change sign at least ``window / 4`` times, the iterates still spread by
    more than ``tolerance``, and the spread of the second half of the window
    is at least half that of the first half (a contracting zig-zag is
    convergence, not oscillation).
    """
    if window < 4:
        raise ValueError("window must be at least 4")
    if isinstance(trace, IterationTrace):
        if len(trace) <= window:
            return False
        if trace.store_iterates:
            ys = np.vstack(trace.iterates[-(window + 1):])
        else:
            ys = np.asarray(trace.iterate_inf[-(window + 1):])[:, None]
    else:
        ys = np.asarray(trace, dtype=float)
        if ys.ndim == 1:
            ys = ys[:, None]
        if ys.shape[0] <= window:
            return False
        ys = ys[-(window + 1):]
    if not np.all(np.isfinite(ys)):
        return False
    spread = np.ptp(ys, axis=0)
    if float(np.max(spread)) <= tolerance:
        return False
    half = ys.shape[0] // 2
    early, late = np.ptp(ys[:half], axis=0), np.ptp(ys[half:], axis=0)
    signs = np.sign(np.diff(ys, axis=0))
    changes = np.sum((signs[1:] * signs[:-1]) < 0, axis=0)
    hit = (changes >= window / 4) & (spread > tolerance) & (late >= 0.5 * early)
    return bool(np.any(hit))
