"""Alternating SSO updates for the two-variable restoration model.

The model couples a target ``H`` and a guide-aligned embedding ``T``::

    ||X - K H||^2 + beta ||Y - S T||^2 + gamma ||T - f H||^2 + phi(H)

with dense linear operators ``K``, ``S`` and ``f`` (the adjoint of ``f`` is its
transpose).  ``phi`` is either absent or ``prox_weight * ||H||_1``.  Each
iteration applies one multiplicative SSO step to ``H`` (followed by the
proximal map) and then one to ``T`` using the fresh ``H``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import as_vector, check_nonnegative, check_nonnegative_scalar
from .objectives import LinearInverseProblem, soft_threshold
from .solvers import IterationTrace, StopReason
from .sso import SlidingSigmoid


def _matrix(a, name):
    a = np.array(a, dtype=float, ndmin=2)
    if a.ndim != 2 or not np.isfinite(a).all():
        raise ValueError(f"{name} must be a finite matrix")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MultiModalModel:
    K: np.ndarray
    S: np.ndarray
    f: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    beta: float = 1.0
    gamma: float = 1.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    prox_weight: float = 0.0

    def __post_init__(self):
        K, S, f = _matrix(self.K, "K"), _matrix(self.S, "S"), _matrix(self.f, "f")
        X = as_vector(self.X, "X", length=K.shape[0])
        Y = as_vector(self.Y, "Y", length=S.shape[0])
        if f.shape != (S.shape[1], K.shape[1]):
            raise ValueError(
                f"f must map H ({K.shape[1]}) to T ({S.shape[1]}), got shape {f.shape}"
            )
        for name in ("beta", "gamma", "alpha1", "alpha2", "prox_weight"):
            object.__setattr__(self, name, check_nonnegative_scalar(getattr(self, name), name))
        for name, val in zip("KSfXY", (K, S, f, X, Y)):
            object.__setattr__(self, name, val)

    @property
    def dim_H(self):
        return self.K.shape[1]

    @property
    def dim_T(self):
        return self.S.shape[1]

    def _HT(self, H, T):
        return as_vector(H, "H", length=self.dim_H), as_vector(T, "T", length=self.dim_T)

    def smooth_objective(self, H, T):
        H, T = self._HT(H, T)
        rx = self.X - self.K @ H
        ry = self.Y - self.S @ T
        rc = T - self.f @ H
        return float(rx @ rx + self.beta * (ry @ ry) + self.gamma * (rc @ rc))

    def total_objective(self, H, T):
        """Joint objective; the l1 prior contributes only when configured."""
        val = self.smooth_objective(H, T)
        if self.prox_weight:
            val += self.prox_weight * float(np.abs(H).sum())
        return val

    def grad_H(self, H, T):
        H, T = self._HT(H, T)
        g = 2.0 * (self.K.T @ (self.K @ H - self.X))
        if self.gamma:
            g = g + 2.0 * self.gamma * (self.f.T @ (self.f @ H - T))
        return g

    def grad_T(self, H, T):
        """Gradient in ``T``; pass the freshly updated ``H``."""
        H, T = self._HT(H, T)
        g = 2.0 * self.beta * (self.S.T @ (self.S @ T - self.Y))
        if self.gamma:
            g = g + 2.0 * self.gamma * (T - self.f @ H)
        return g

    def update_H(self, H, T):
        H, T = self._HT(H, T)
        check_nonnegative(H, "H")
        return self._update_H(H, T)[0]

    def update_T(self, H_new, T):
        H_new, T = self._HT(H_new, T)
        check_nonnegative(T, "T")
        return self._update_T(H_new, T)[0]

    def _update_H(self, H, T):
        op = SlidingSigmoid(self.alpha1)
        g = self.grad_H(H, T)
        mult = 1.0 + op.deviation(g)
        new = H * mult
        if self.prox_weight:
            # threshold scaled by the equivalent additive step, as in sso_pga_step
            new = soft_threshold(new, self.prox_weight * H * op.theta(g))
        return new, mult

    def _update_T(self, H_new, T):
        op = SlidingSigmoid(self.alpha2)
        g = self.grad_T(H_new, T)
        mult = 1.0 + op.deviation(g)
        return T * mult, mult

    def block_problems(self, H, T):
        """Each block's energy as a stand-alone least-squares problem.

        The H block is ``||[X; sqrt(g) T] - [K; sqrt(g) f] H||^2`` and the T
        block ``||[sqrt(b) Y; sqrt(g) f H] - [sqrt(b) S; sqrt(g) I] T||^2``.
        """
        H, T = self._HT(H, T)
        sg, sb = math.sqrt(self.gamma), math.sqrt(self.beta)
        ph = LinearInverseProblem(np.vstack([self.K, sg * self.f]), np.concatenate([self.X, sg * T]))
        pt = LinearInverseProblem(
            np.vstack([sb * self.S, sg * np.eye(self.dim_T)]),
            np.concatenate([sb * self.Y, sg * (self.f @ H)]),
        )
        return ph, pt

    def to_dict(self):
        d = {k: getattr(self, k).tolist() for k in "KSfXY"}
        d.update(beta=self.beta, gamma=self.gamma, alpha1=self.alpha1, alpha2=self.alpha2)
        if self.prox_weight:
            d["prox_weight"] = self.prox_weight
        return d

    @classmethod
    def from_dict(cls, doc):
        missing = [k for k in ("K", "S", "f", "X", "Y") if k not in doc]
        if missing:
            raise ValueError(f"multimodal document lacks keys {missing}")
        kw = {k: doc[k] for k in ("K", "S", "f", "X", "Y")}
        for k in ("beta", "gamma", "alpha1", "alpha2", "prox_weight"):
            if k in doc:
                kw[k] = float(doc[k])
        return cls(**kw)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))


@dataclass
class MultiModalResult:
    H: list = field(default_factory=list)
    T: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    mult_min: list = field(default_factory=list)
    mult_max: list = field(default_factory=list)
    stop_reason: StopReason | None = None

    @property
    def n_iter(self):
        return len(self.objectives) - 1

    def to_trace(self, model):
        """Flatten into an :class:`IterationTrace` over the stacked ``[H; T]``."""
        tr = IterationTrace(method="SSO_PGA_MULTIMODAL", dimension=model.dim_H + model.dim_T)
        for t, (H, T, obj) in enumerate(zip(self.H, self.T, self.objectives)):
            g = np.concatenate([model.grad_H(H, T), model.grad_T(H, T)])
            tr.record(t, np.concatenate([H, T]), obj, g)
            tr.mult_min[-1], tr.mult_max[-1] = self.mult_min[t], self.mult_max[t]
        tr.stop_reason = self.stop_reason
        return tr


def solve_multimodal(model, H0, T0, max_iters=1000, tolerance=1e-10):
    """Alternate H and T updates, recording the joint objective.

    Stops on the same rules as :func:`ssopga.solvers.run`.  ``max_iters = 0``
    returns the initial state only.
    """
    H = as_vector(H0, "H0", length=model.dim_H, copy=True)
    T = as_vector(T0, "T0", length=model.dim_T, copy=True)
    check_nonnegative(H, "H0")
    check_nonnegative(T, "T0")
    if int(max_iters) != max_iters or max_iters < 0:
        raise ValueError("max_iters must be a non-negative integer")
    res = MultiModalResult()
    obj = model.total_objective(H, T)
    res.H.append(H)
    res.T.append(T)
    res.objectives.append(obj)
    res.mult_min.append(math.nan)
    res.mult_max.append(math.nan)
    if max_iters == 0:
        res.stop_reason = StopReason.MAX_ITERS
        return res
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(int(max_iters)):
            H_new, mh = model._update_H(H, T)
            T_new, mt = model._update_T(H_new, T)
            finite = np.isfinite(H_new).all() and np.isfinite(T_new).all()
            new = model.total_objective(H_new, T_new) if finite else math.nan
            res.H.append(H_new)
            res.T.append(T_new)
            res.objectives.append(new)
            res.mult_min.append(float(min(mh.min(), mt.min())))
            res.mult_max.append(float(max(mh.max(), mt.max())))
            if not math.isfinite(new):
                res.stop_reason = StopReason.NONFINITE
                return res
            moved = max(float(np.abs(H_new - H).max()), float(np.abs(T_new - T).max()))
            if abs(new - obj) <= tolerance * max(1.0, obj) or moved <= tolerance:
                res.stop_reason = StopReason.CONVERGED
                return res
            H, T, obj = H_new, T_new, new
    res.stop_reason = StopReason.MAX_ITERS
    return res


def make_consistent_toy(n=16, seed=0, *, beta=1.0, gamma=1.0):
    """Random ``n``-dimensional instance with an exact non-negative solution.

    Operators are well-conditioned perturbations of scaled identities;
    ``X = K H*``, ``T* = f H*`` and ``Y = S T*`` by forward simulation.
    Returns ``(model, H_star, T_star)``.
    """
    rng = np.random.default_rng(seed)
    H_star = rng.uniform(0.2, 0.8, n)
    K = 0.6 * np.eye(n) + 0.1 * rng.uniform(0.0, 1.0, (n, n)) / math.sqrt(n)
    S = 0.6 * np.eye(n) + 0.1 * rng.uniform(0.0, 1.0, (n, n)) / math.sqrt(n)
    f = 0.5 * np.eye(n) + 0.1 * rng.uniform(0.0, 1.0, (n, n)) / math.sqrt(n)
    T_star = f @ H_star
    model = MultiModalModel(K=K, S=S, f=f, X=K @ H_star, Y=S @ T_star, beta=beta, gamma=gamma)
    return model, H_star, T_star
