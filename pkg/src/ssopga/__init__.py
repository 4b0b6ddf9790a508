"""Sliding Sigmoid Operator and the SSO proximal gradient algorithm."""
from .estimators import LeeSeungRegressor, ProximalGradientRegressor, SSOPGARegressor
from .multimodal import MultiModalModel, MultiModalResult, make_consistent_toy, solve_multimodal
from .objectives import (
    MINIMIZERS,
    CompositeObjective,
    IdentityProx,
    L1Prox,
    LinearInverseProblem,
    ScalarEnergy,
    grid_minimizer,
    make_scalar_benchmark,
    soft_threshold,
    spectral_norm,
)
from .solvers import (
    CertificationError,
    IterationTrace,
    Method,
    SolverConfig,
    StopReason,
    TraceParseError,
    check_monotone,
    detect_oscillation,
    lee_seung_step,
    pga_step,
    run,
    sso_pga_step,
)
from .sso import DomainError, SlidingSigmoid, StepEquivalence

__version__ = "0.1.0"

__all__ = [
    "CertificationError",
    "CompositeObjective",
    "DomainError",
    "IdentityProx",
    "IterationTrace",
    "L1Prox",
    "LeeSeungRegressor",
    "LinearInverseProblem",
    "MINIMIZERS",
    "Method",
    "MultiModalModel",
    "MultiModalResult",
    "ProximalGradientRegressor",
    "SSOPGARegressor",
    "ScalarEnergy",
    "SlidingSigmoid",
    "SolverConfig",
    "StepEquivalence",
    "StopReason",
    "TraceParseError",
    "check_monotone",
    "detect_oscillation",
    "grid_minimizer",
    "lee_seung_step",
    "make_consistent_toy",
    "make_scalar_benchmark",
    "pga_step",
    "run",
    "soft_threshold",
    "solve_multimodal",
    "spectral_norm",
    "sso_pga_step",
]
