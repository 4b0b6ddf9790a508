"""The sliding sigmoid operator and its analytic companions.

``SSO_alpha(z) = 2 sigmoid(-z - alpha) + 2 sigmoid(alpha) - 1`` is a bounded,
strictly decreasing multiplier that equals 1 at ``z = 0``.  Fed with a
gradient, ``y * SSO_alpha(grad)`` moves ``y`` downhill while keeping its sign.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

# beyond this sigmoid(alpha) == 1 in double precision
ALPHA_CAP = 700.0

# below this |z| the deviation is evaluated through sinh/cosh to avoid
# cancellation in sigmoid(-z - alpha) - sigmoid(-alpha)
_SMALL_Z = 1.0


class DomainError(ValueError):
    """Raised when an operator receives a value outside its domain."""


def _check_finite(z, name="z"):
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0:
        if not np.isfinite(arr):
            raise DomainError(f"{name} must be finite, got {float(arr)!r}")
        return arr
    bad = np.flatnonzero(~np.isfinite(arr.ravel()))
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"{name}[{i}] is not finite ({arr.ravel()[i]!r})")
    return arr


def _sech(x):
    # 2 e^-|x| / (1 + e^-2|x|) never overflows
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e * e)


def deviation(z, alpha):
    """``SSO_alpha(z) - 1`` broadcast over arrays of ``z`` and ``alpha``.

    No validation; :class:`SlidingSigmoid` is the checked entry point.
    """
    z = np.asarray(z, dtype=float)
    a = np.asarray(alpha, dtype=float)
    small = np.abs(z) <= _SMALL_Z
    # sigmoid(u) - sigmoid(v) = sinh((u - v)/2) / (2 cosh(u/2) cosh(v/2))
    zs = np.where(small, z, 0.0)
    near = -np.sinh(zs / 2) * _sech((a + zs) / 2) * _sech(a / 2)
    far = 2.0 * (expit(-z - a) - expit(-a))
    tail = 2.0 * expit(-a)
    # saturated values must not round past the band edges
    out = np.clip(np.where(small, near, far), -tail, 2.0 - tail)
    return out if out.ndim else float(out)


def theta(z, alpha):
    """``(1 - SSO_alpha(z)) / z`` with its limit at zero, unvalidated."""
    z = np.asarray(z, dtype=float)
    a = np.asarray(alpha, dtype=float)
    small = np.abs(z) <= _SMALL_Z
    zs = np.where(small, z, 1.0)
    # sinh(z/2)/z = 1/2 + O(z^2), exact in double below 1e-8
    tiny = np.abs(zs) < 1e-8
    ratio = np.where(tiny, 0.5, np.sinh(zs / 2) / np.where(tiny, 1.0, zs))
    near = ratio * _sech((a + zs) / 2) * _sech(a / 2)
    zf = np.where(small, 1.0, z)
    far = -2.0 * (expit(-zf - a) - expit(-a)) / zf
    out = np.where(small, near, far)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class StepEquivalence:
    """Additive step reproducing one multiplicative SSO step.

    ``y * SSO(z) == y - rho * z`` with ``rho = y * theta``.
    """

    theta: float
    rho: float


@dataclass(frozen=True)
class SlidingSigmoid:
    """Sliding sigmoid operator with sliding parameter ``alpha >= 0``.

    Parameters
    ----------
    alpha : float
        Slides the sigmoid along the point (0, 1).  The multiplier band is
        ``(2 sigmoid(alpha) - 1, 2 sigmoid(alpha) + 1)``: (0, 2) at
        ``alpha = 0`` and tending to (1, 3) as ``alpha`` grows.

    Examples
    --------
    >>> op = SlidingSigmoid(0.0)
    >>> float(op(0.0))
    1.0
    >>> round(float(op(np.log(3.0))), 12)
    0.5
    """

    alpha: float = 0.0

    def __post_init__(self):
        a = float(self.alpha)
        if not np.isfinite(a):
            raise DomainError(f"alpha must be finite, got {self.alpha!r}")
        if a < 0:
            raise DomainError(f"alpha must be non-negative, got {a}")
        object.__setattr__(self, "alpha", a)

    def deviation(self, z):
        """``SSO(z) - 1``, exactly zero at ``z = 0``."""
        return deviation(_check_finite(z), self.alpha)

    def __call__(self, z):
        """Apply the operator elementwise to a scalar or array."""
        return 1.0 + self.deviation(z)

    apply = __call__

    def bounds(self):
        """Open multiplier band ``(2 sigmoid(a) - 1, 2 sigmoid(a) + 1)``."""
        a = min(self.alpha, ALPHA_CAP)
        tail = 2.0 * float(expit(-a))
        # same rounding as 1 + deviation at saturation
        return 1.0 + (-tail), 1.0 + (2.0 - tail)

    def derivative(self, z):
        """``d SSO / dz = -2 sigmoid(-z - a) (1 - sigmoid(-z - a))``."""
        z = _check_finite(z)
        u = -z - self.alpha
        out = -2.0 * expit(u) * expit(-u)
        return out if np.ndim(out) else float(out)

    def theta(self, z):
        """Per-coordinate factor in (0, 1/2] with ``SSO(z) = 1 - theta * z``.

        At ``z = 0`` the continuous limit ``-SSO'(0)`` is returned.
        """
        return theta(_check_finite(z), self.alpha)

    def step_equivalence(self, y, z):
        """Equivalent additive step for a non-negative coordinate ``y``."""
        y = float(y)
        if not y >= 0:
            raise DomainError(f"y must be non-negative, got {y!r}")
        theta = float(self.theta(z))
        return StepEquivalence(theta=theta, rho=y * theta)

    @property
    def eta(self):
        """Lipschitz-type envelope constant ``(1 + alpha) / 2``."""
        return (1.0 + self.alpha) / 2.0

    def lemma1_slack(self, z):
        """``eta |z| - |SSO(z) - 1|``; non-negative everywhere."""
        z = _check_finite(z)
        out = self.eta * np.abs(z) - np.abs(self.deviation(z))
        return out if np.ndim(out) else float(out)
