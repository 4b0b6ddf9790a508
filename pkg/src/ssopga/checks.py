"""Randomised property suites behind ``ssopga verify``.

Each suite draws its cases from a seeded generator and returns a
:class:`SuiteResult`; none of them raise on a failed property.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .presets import random_descent_instance
from .solvers import CertificationError, Method, SolverConfig, check_monotone, run
from .sso import deviation, theta

ENVELOPE_TOL = 1e-12
EQUIVALENCE_TOL = 1e-12


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def envelope_suite(rng, n=100_000):
    """``eta(alpha) |z| >= |SSO(z) - 1|`` for alpha in [0, 5], z in [-50, 50]."""
    t0 = time.perf_counter()
    alpha = rng.uniform(0.0, 5.0, n)
    z = rng.uniform(-50.0, 50.0, n)
    slack = (1.0 + alpha) / 2.0 * np.abs(z) - np.abs(deviation(z, alpha))
    worst = float(slack.min())
    ok = worst >= -ENVELOPE_TOL
    return SuiteResult("envelope", ok, f"{n} cases, min slack {worst:.3e}", time.perf_counter() - t0)


def equivalence_suite(rng, n=10_000):
    """``y SSO(z) == y - (y theta) z`` with ``theta`` in (0, 1/2]."""
    t0 = time.perf_counter()
    alpha = rng.uniform(0.0, 5.0, n)
    z = rng.uniform(-50.0, 50.0, n)
    y = rng.uniform(1e-3, 10.0, n)
    th = theta(z, alpha)
    err = float(np.max(np.abs(y * (1.0 + deviation(z, alpha)) - (y - y * th * z))))
    tmin, tmax = float(th.min()), float(th.max())
    ok = err <= EQUIVALENCE_TOL and tmin > 0 and tmax <= 0.5 + EQUIVALENCE_TOL
    detail = f"{n} cases, max error {err:.3e}, theta in [{tmin:.3e}, {tmax:.6f}]"
    return SuiteResult("step-equivalence", ok, detail, time.perf_counter() - t0)


def descent_suite(rng, n=100, iters=1000):
    """Certified SSO-PGA runs on random instances never increase the energy."""
    t0 = time.perf_counter()
    violations = aborted = 0
    # a vanishing tolerance keeps every run on its full budget
    cfg = SolverConfig(method=Method.SSO_PGA, alpha=0.0, max_iters=iters, tolerance=1e-300, certified=True)
    for _ in range(n):
        problem, y0 = random_descent_instance(rng)
        try:
            trace = run(cfg, problem, y0)
        except CertificationError as exc:
            aborted += 1
            trace = exc.trace
        violations += len(check_monotone(trace))
    ok = violations == 0 and aborted == 0
    detail = f"{n} runs x {iters} iterations, {violations} violations, {aborted} certification aborts"
    return SuiteResult("certified-descent", ok, detail, time.perf_counter() - t0)


SUITES = (envelope_suite, equivalence_suite, descent_suite)


def run_all(seed=0):
    """Run every suite; each receives its own generator spawned from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    return [suite(np.random.default_rng(ss)) for suite, ss in zip(SUITES, children)]
