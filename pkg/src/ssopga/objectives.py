"""Smooth energies, proximal terms and the benchmark problems.

A :class:`CompositeObjective` pairs a smooth energy (value + gradient) with an
optional non-smooth term exposing a proximal map.  Without the non-smooth term
it is a plain smooth problem; with an l1 term it is the composite case solved
by proximal gradient methods.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from ._validation import as_vector, check_nonnegative_scalar

MAX_DENSE_SIZE = 2000
SPECTRAL_SEED = 42
SPECTRAL_TOL = 1e-10
SPECTRAL_MAX_ITER = 10_000


class SmoothEnergy(Protocol):
    dimension: int

    def value(self, y: np.ndarray) -> float: ...

    def gradient(self, y: np.ndarray) -> np.ndarray: ...


def soft_threshold(v, tau):
    """Proximal map of ``tau * ||.||_1``: ``sign(v) * max(|v| - tau, 0)``.

    ``tau`` may be a scalar or an array broadcastable against ``v``.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or not np.all(np.isfinite(tau)):
        raise ValueError("threshold must be finite and non-negative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


class IdentityProx:
    """Absent non-smooth term; its proximal map is the identity."""

    weight = 0.0

    def value(self, y):
        return 0.0

    def prox(self, v, tau=0.0):
        return np.asarray(v, dtype=float)

    def __repr__(self):
        return "IdentityProx()"


@dataclass(frozen=True)
class L1Prox:
    """``weight * ||y||_1`` with soft thresholding as proximal map.

    The threshold passed to :meth:`prox` is the full threshold; solvers
    multiply ``weight`` by their step size before calling it.
    """

    weight: float

    def __post_init__(self):
        check_nonnegative_scalar(self.weight, "weight")

    def value(self, y):
        return self.weight * float(np.abs(y).sum())

    def prox(self, v, tau=0.0):
        # thresholds come from solvers as weight * step >= 0; skip re-validation
        return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def spectral_norm(H, *, tol=SPECTRAL_TOL, max_iter=SPECTRAL_MAX_ITER, seed=SPECTRAL_SEED):
    """Largest singular value of a dense matrix by power iteration on H^T H.

    The start vector is drawn from a fixed seed so repeated calls agree
    bitwise.  Iteration stops once the Rayleigh quotient changes by less than
    ``tol`` relative.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.size == 0:
        raise ValueError("H must be a non-empty 2-D array")
    if not np.all(np.isfinite(H)):
        raise ValueError("H must be finite")
    if not np.any(H):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(H.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = H.T @ (H @ v)
        new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            # start vector in the null space; restart from a fresh direction
            v = rng.standard_normal(H.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / nrm
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    # one more Rayleigh quotient with the final vector
    lam = max(lam, float(v @ (H.T @ (H @ v))))
    return math.sqrt(lam)


@dataclass(eq=False)
class LinearInverseProblem:
    """Least-squares energy ``E(y) = ||x - H y||^2`` for a dense ``H`` (n x m)."""

    H: np.ndarray
    x: np.ndarray
    _norm: float | None = field(default=None, repr=False)

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.ndim != 2 or min(H.shape) < 1:
            raise ValueError(f"H must be a non-empty matrix, got shape {H.shape}")
        if max(H.shape) > MAX_DENSE_SIZE:
            raise ValueError(f"H exceeds the dense size cap {MAX_DENSE_SIZE}")
        if not np.all(np.isfinite(H)):
            raise ValueError("H must be finite")
        x = as_vector(self.x, "x", length=H.shape[0])
        H.setflags(write=False)
        x.setflags(write=False)
        self.H, self.x = H, x

    @property
    def dimension(self):
        return self.H.shape[1]

    @property
    def shape(self):
        return self.H.shape

    def _check(self, y):
        return as_vector(y, "y", length=self.dimension)

    def residual(self, y):
        return self.x - self.H @ self._check(y)

    def value(self, y):
        r = self.residual(y)
        return float(r @ r)

    def gradient(self, y):
        y = self._check(y)
        return 2.0 * (self.H.T @ (self.H @ y - self.x))

    def evaluate(self, y):
        """``(value, gradient)`` sharing one residual; no input validation."""
        r = self.H @ y - self.x
        return float(r @ r), 2.0 * (self.H.T @ r)

    @property
    def norm(self):
        """Cached spectral norm of ``H``."""
        if self._norm is None:
            self._norm = spectral_norm(self.H)
        return self._norm

    def lipschitz_constant(self):
        return 2.0 * self.norm**2

    def alpha_upper_bound(self, y):
        """Largest sliding parameter with guaranteed descent from ``y``.

        Returns ``2 / (kappa ||H||^2) - 1`` with ``kappa = max(y)``.  A negative
        value means the sufficient condition admits no ``alpha >= 0``.
        """
        y = self._check(y)
        if np.any(y < 0):
            raise ValueError("y must be non-negative")
        kappa = float(np.max(np.abs(y)))
        if kappa == 0.0:
            raise ValueError("the bound is undefined at y = 0")
        h2 = self.norm**2
        if h2 == 0.0:
            return math.inf
        return 2.0 / (kappa * h2) - 1.0

    def to_dict(self):
        return {"H": self.H.tolist(), "x": self.x.tolist()}

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(np.asarray(doc["H"], dtype=float), np.asarray(doc["x"], dtype=float))
        except KeyError as exc:
            raise ValueError(f"inverse problem document lacks key {exc}") from None

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ScalarEnergy:
    """One-dimensional energy ``(y - center)^2`` plus an optional wiggle.

    With ``wiggle`` the energy gains ``sin(4(y - 0.5)) + cos(2(y - 0.5))`` and
    becomes non-convex.
    """

    center: float = 0.5
    wiggle: bool = False
    dimension: int = 1

    def value(self, y):
        return float(self.values(as_vector(y, "y", length=1))[0])

    def values(self, grid):
        """Vectorised energy over an array of scalar points."""
        grid = np.asarray(grid, dtype=float)
        v = (grid - self.center) ** 2
        if self.wiggle:
            v = v + np.sin(4 * (grid - 0.5)) + np.cos(2 * (grid - 0.5))
        return v

    def gradient(self, y):
        return self._grad(as_vector(y, "y", length=1))

    def _grad(self, y):
        g = 2.0 * (y - self.center)
        if self.wiggle:
            g = g + 4.0 * np.cos(4 * (y - 0.5)) - 2.0 * np.sin(2 * (y - 0.5))
        return g

    def evaluate(self, y):
        """``(value, gradient)`` without input validation."""
        d = float(y[0]) - self.center
        v = d * d
        if self.wiggle:
            u = float(y[0]) - 0.5
            v += math.sin(4 * u) + math.cos(2 * u)
        return v, self._grad(y)


@dataclass(frozen=True)
class CompositeObjective:
    """Smooth energy plus an optional proximable term."""

    smooth: SmoothEnergy
    nonsmooth: IdentityProx | L1Prox = field(default_factory=IdentityProx)
    name: str = ""

    @property
    def dimension(self):
        return self.smooth.dimension

    @property
    def has_prox(self):
        return self.nonsmooth.weight > 0

    def value(self, y):
        return self.smooth.value(y) + self.nonsmooth.value(y)

    def gradient(self, y):
        return self.smooth.gradient(y)

    def evaluate(self, y):
        """Objective value and smooth gradient in one call, unvalidated."""
        smooth = self.smooth
        if hasattr(smooth, "evaluate"):
            v, g = smooth.evaluate(y)
        else:
            v, g = smooth.value(y), smooth.gradient(y)
        if self.nonsmooth.weight:
            v += self.nonsmooth.value(y)
        return v, g

    def prox(self, v, tau):
        return self.nonsmooth.prox(v, tau)


SCALAR_IDS = ("I", "II", "I+", "II+")
_ALIASES = {"I_plus": "I+", "II_plus": "II+", "1": "I", "2": "II"}

# grid-search minimizers over [-2, 3] at resolution 1e-6
MINIMIZERS = {
    "I": 0.5,
    "II": 0.25,
    "I+": 1.632384,
    "II+": 0.032824,
}


def make_scalar_benchmark(problem_id, *, center=0.5):
    """Build one of the four 1-D benchmark problems.

    ``I``: ``(y - c)^2``; ``II``: adds ``|y| / 2``; ``I+`` and ``II+`` add the
    trigonometric wiggle.  ``center`` moves the quadratic's vertex (used for
    the large-optimum experiments).
    """
    pid = _ALIASES.get(str(problem_id), str(problem_id))
    if pid not in SCALAR_IDS:
        raise ValueError(f"unknown scalar benchmark {problem_id!r}; expected one of {SCALAR_IDS}")
    smooth = ScalarEnergy(center=float(center), wiggle=pid.endswith("+"))
    nonsmooth = L1Prox(0.5) if pid.startswith("II") else IdentityProx()
    name = pid if center == 0.5 else f"{pid}@{center:g}"
    return CompositeObjective(smooth, nonsmooth, name=name)


def grid_minimizer(objective, lo=-2.0, hi=3.0, step=1e-6):
    """Global minimizer of a 1-D composite objective by exhaustive grid search."""
    n = int(round((hi - lo) / step)) + 1
    grid = np.linspace(lo, hi, n)
    vals = objective.smooth.values(grid) + objective.nonsmooth.weight * np.abs(grid)
    return float(grid[int(np.argmin(vals))])


def as_objective(problem):
    """Wrap a bare smooth energy into a :class:`CompositeObjective`."""
    if isinstance(problem, CompositeObjective):
        return problem
    if isinstance(problem, str):
        return make_scalar_benchmark(problem)
    return CompositeObjective(problem)
