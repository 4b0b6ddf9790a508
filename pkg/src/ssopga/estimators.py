"""scikit-learn style estimators over the linear inverse problem.

The design matrix plays the degradation operator and the target the
observation, so ``fit(H, x)`` recovers ``y`` in ``x ~ H y`` and exposes it as
``coef_``.  All estimators support ``get_params`` / ``set_params`` and work
inside pipelines and model-selection tools.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .objectives import CompositeObjective, IdentityProx, L1Prox, LinearInverseProblem
from .solvers import Method, SolverConfig, run


class _InverseProblemRegressor(RegressorMixin, BaseEstimator):
    _method = None

    def _config(self, problem):
        raise NotImplementedError

    def _objective(self, problem):
        return CompositeObjective(problem)

    def fit(self, X, y):
        """Solve the inverse problem ``min ||y - X w||^2 (+ penalty)``.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
            Degradation operator.
        y : array-like of shape (n_samples,)
            Observation.

        Returns
        -------
        self
        """
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        problem = LinearInverseProblem(X, y)
        if self.init < 0 or (self.init == 0 and self._method is not Method.PGA):
            raise ValueError("multiplicative methods need a positive init")
        coef0 = np.full(X.shape[1], float(self.init))
        trace = run(self._config(problem), self._objective(problem), coef0)
        self.coef_ = trace.final_iterate
        self.trace_ = trace
        self.n_iter_ = trace.n_iter
        self.stop_reason_ = trace.stop_reason.value
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_


class SSOPGARegressor(_InverseProblemRegressor):
    """Non-negative least squares (optionally l1-penalised) by SSO-PGA.

    Parameters
    ----------
    alpha : float, default=0.0
        Sliding parameter of the operator.
    l1_penalty : float, default=0.0
        Weight of the l1 term; zero solves the plain least-squares problem.
    clip : float or None, default=None
        Clip the (scaled) gradient to ``[-clip, clip]`` before the operator.
    gradient_scale : float, default=1.0
    max_iter : int, default=1000
    tol : float, default=1e-10
    init : float, default=1.0
        Constant starting value of every coefficient; must be positive.
    certified : bool, default=False
        Re-check the sliding parameter against the guaranteed-descent bound
        at every iteration and raise if it is exceeded.
    """

    _method = Method.SSO_PGA

    def __init__(
        self,
        alpha=0.0,
        l1_penalty=0.0,
        clip=None,
        gradient_scale=1.0,
        max_iter=1000,
        tol=1e-10,
        init=1.0,
        certified=False,
    ):
        self.alpha = alpha
        self.l1_penalty = l1_penalty
        self.clip = clip
        self.gradient_scale = gradient_scale
        self.max_iter = max_iter
        self.tol = tol
        self.init = init
        self.certified = certified

    def _objective(self, problem):
        prox = L1Prox(self.l1_penalty) if self.l1_penalty else IdentityProx()
        return CompositeObjective(problem, prox)

    def _config(self, problem):
        return SolverConfig(
            method=Method.SSO_PGA,
            alpha=self.alpha,
            clip=self.clip,
            gradient_scale=self.gradient_scale,
            max_iters=self.max_iter,
            tolerance=self.tol,
            certified=self.certified,
        )


class ProximalGradientRegressor(_InverseProblemRegressor):
    """Classical proximal gradient descent (ISTA when ``l1_penalty > 0``).

    ``learning_rate=None`` uses ``1 / L`` with ``L = 2 ||X||_2^2``.
    """

    _method = Method.PGA

    def __init__(self, learning_rate=None, l1_penalty=0.0, max_iter=1000, tol=1e-10, init=0.0):
        self.learning_rate = learning_rate
        self.l1_penalty = l1_penalty
        self.max_iter = max_iter
        self.tol = tol
        self.init = init

    def _objective(self, problem):
        prox = L1Prox(self.l1_penalty) if self.l1_penalty else IdentityProx()
        return CompositeObjective(problem, prox)

    def _config(self, problem):
        lr = self.learning_rate
        if lr is None:
            L = problem.lipschitz_constant()
            lr = 1.0 / L if L > 0 else 1.0
        return SolverConfig(method=Method.PGA, learning_rate=lr, max_iters=self.max_iter, tolerance=self.tol)


class LeeSeungRegressor(_InverseProblemRegressor):
    """Lee-Seung multiplicative updates for non-negative least squares.

    With ``epsilon=0`` a vanishing denominator produces a non-finite
    coefficient and the fit stops with ``stop_reason_ == "nonfinite"``.
    """

    _method = Method.LEE_SEUNG

    def __init__(self, epsilon=0.0, max_iter=1000, tol=1e-10, init=1.0):
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.tol = tol
        self.init = init

    def _config(self, problem):
        return SolverConfig(
            method=Method.LEE_SEUNG, epsilon=self.epsilon, max_iters=self.max_iter, tolerance=self.tol
        )
