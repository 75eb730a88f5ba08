"""Null-model logistic regression for binomial counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import gammaln

from .dataset import BinomialSeries
from .errors import ConvergenceError, SeparationError
from .kernels import expit_pair, softplus

MAX_ITER = 100
MAX_HALVINGS = 30
GRAD_TOL = 1e-10
LOGLIK_TOL = 1e-12
SEPARATION_BOUND = 1e3
# fitted |W| beyond this triggers the separation diagnosis
_SATURATION = 25.0


@dataclass(frozen=True, eq=False)
class GlmFit:
    """Maximum likelihood fit of the independence model ``W_t = x_t' beta``."""

    beta_hat: np.ndarray
    pi: np.ndarray
    sigma2: np.ndarray
    loglik: float
    info: np.ndarray
    converged: bool
    iterations: int

    @property
    def cov(self) -> np.ndarray:
        return np.linalg.inv(self.info)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    def residuals(self, series: BinomialSeries, gamma: int = 0) -> np.ndarray:
        """``sigma_t**-gamma * (y_t - m_t pi_t)``."""
        eI = raw_residuals(series, self.pi, self.sigma2)
        if gamma == 0:
            return eI
        return eI * self.sigma2 ** (-0.5 * gamma)


def raw_residuals(series: BinomialSeries, pi: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """``y - m pi`` as ``y (1 - pi) - (m - y) pi``, exact when ``pi`` rounds to 1."""
    mp = series.m * pi
    q = np.divide(sigma2, mp, out=np.ones_like(mp), where=mp > 0)
    return series.y * q - (series.m - series.y) * pi


def log_binom_coef(series: BinomialSeries) -> float:
    y, m = series.y, series.m
    return float(np.sum(gammaln(m + 1.0) - gammaln(y + 1.0) - gammaln(m - y + 1.0)))


def _loglik_eta(series: BinomialSeries, eta: np.ndarray) -> float:
    return float(np.sum(series.y * eta - series.m * softplus(eta)))


def loglik_at(series: BinomialSeries, beta) -> float:
    """Binomial log-likelihood at ``beta``, including the ``log C(m, y)`` terms."""
    eta = series.X @ np.asarray(beta, dtype=float)
    return _loglik_eta(series, eta) + log_binom_coef(series)


def _moments(series: BinomialSeries, beta: np.ndarray):
    eta = series.X @ beta
    p, q = expit_pair(eta)
    s2 = series.m * p * q
    grad = series.X.T @ (series.y * q - (series.m - series.y) * p)
    info = (series.X * s2[:, None]).T @ series.X
    return eta, p, s2, grad, info


def is_separated(series: BinomialSeries, tol: float = 1e-7) -> bool:
    """True when some direction ``b`` pushes every fitted probability toward its
    observed extreme, so that the binomial MLE does not exist.

    Solved as a linear program: maximise ``sum_t s_t x_t'b`` subject to
    ``0 <= s_t x_t'b <= 1`` where ``s_t = +1`` if ``y_t = m_t``, ``-1`` if
    ``y_t = 0``, and ``x_t'b = 0`` for interior counts.
    """
    X = series.X
    s = np.where(series.y == series.m, 1.0, np.where(series.y == 0, -1.0, 0.0))
    edge = s != 0
    if not edge.any():
        return False
    A = s[edge, None] * X[edge]
    A_eq = X[~edge] if (~edge).any() else None
    b_eq = np.zeros(A_eq.shape[0]) if A_eq is not None else None
    res = linprog(
        -A.sum(axis=0),
        A_ub=np.vstack([A, -A]),
        b_ub=np.concatenate([np.ones(A.shape[0]), np.zeros(A.shape[0])]),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(None, None)] * X.shape[1],
        method="highs",
    )
    return bool(res.status == 0 and -res.fun > tol)


def fit_glm(series: BinomialSeries) -> GlmFit:
    """Newton-Raphson with step halving from ``beta = 0``.

    Converged when ``max|grad| <= 1e-10`` and the last log-likelihood change is
    at most ``1e-12``. Raises :class:`SeparationError` when the MLE does not
    exist and :class:`ConvergenceError` after 100 iterations.
    """
    beta = np.zeros(series.r)
    eta, p, s2, grad, info = _moments(series, beta)
    ll = _loglik_eta(series, eta)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            break
        for _ in range(MAX_HALVINGS + 1):
            cand = beta + step
            ll_new = _loglik_eta(series, series.X @ cand)
            if ll_new >= ll - 1e-13 * abs(ll):
                break
            step = step / 2
        else:
            break
        if np.max(np.abs(cand)) > SEPARATION_BOUND:
            raise SeparationError(f"|beta| exceeded {SEPARATION_BOUND:g}: data are separated")
        dll = ll_new - ll
        beta = cand
        ll = ll_new
        eta, p, s2, grad, info = _moments(series, beta)
        if np.max(np.abs(grad), initial=0.0) <= GRAD_TOL and abs(dll) <= LOGLIK_TOL:
            converged = True
            break
        if np.max(np.abs(eta)) > _SATURATION and is_separated(series):
            raise SeparationError("fitted probabilities are degenerate: data are separated")
    if not converged:
        # a flat final step at machine precision is still an optimum
        scale = max(1.0, float(np.max(np.abs(series.X.T @ (series.m * p)), initial=0.0)))
        if np.max(np.abs(grad), initial=0.0) > 1e-8 * scale:
            if is_separated(series):
                raise SeparationError("binomial MLE does not exist: data are separated")
            raise ConvergenceError(f"GLM did not converge in {MAX_ITER} iterations", last=beta)
        converged = True
    if np.max(np.abs(eta), initial=0.0) > _SATURATION and is_separated(series):
        raise SeparationError("fitted probabilities are degenerate: data are separated")
    return GlmFit(
        beta_hat=beta,
        pi=p,
        sigma2=s2,
        loglik=ll + log_binom_coef(series),
        info=info,
        converged=converged,
        iterations=it,
    )


def glm_at(series: BinomialSeries, beta) -> GlmFit:
    """Null-model quantities at a given ``beta`` (no fitting); ``converged`` is False."""
    beta = np.asarray(beta, dtype=float)
    eta, p, s2, _, info = _moments(series, beta)
    return GlmFit(beta_hat=beta, pi=p, sigma2=s2, loglik=_loglik_eta(series, eta) + log_binom_coef(series),
                  info=info, converged=False, iterations=0)
