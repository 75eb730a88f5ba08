"""GLARMA state recursion, likelihood derivatives and fits at fixed nuisance.

The model is parametrised as

    Z_t = sum_{j in overlap} omega_j Z_{t-j}
        + sum_{j in AR-only lags} psi_j Z_{t-j}
        + sum_{j in union} psi_j e_{t-j},

which is the usual ``phi``/``theta`` form with ``omega_j = phi_j`` and
``psi_j = theta_j + phi_j`` on shared lags. ``psi`` is ordered by ascending
lag over the union of AR and MA lags; ``omega`` by ascending overlap lag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import BinomialSeries, ModelSpec, lag_sets_partition
from .errors import ConvergenceError, FitError, NumericError, ParameterError, ValidationError
from .glm import GlmFit, fit_glm, log_binom_coef
from .rng import uniforms

MAX_ITER = 200
MAX_HALVINGS = 30
GRAD_TOL = 1e-8
LOGLIK_TOL = 1e-10


def root_moduli(omega, lags) -> np.ndarray:
    """Moduli of the roots of ``1 - sum_k omega_k xi**lags_k``.

    Computed as reciprocals of the companion-matrix eigenvalues, which stays
    well conditioned when the leading coefficient is tiny.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if omega.size == 0 or not np.any(omega):
        return np.array([np.inf])
    deg = max(lags)
    C = np.zeros((deg, deg))
    for w, j in zip(omega, lags):
        C[0, j - 1] += w
    C[1:, :-1] = np.eye(deg - 1)
    lam = np.abs(np.linalg.eigvals(C))
    with np.errstate(divide="ignore", over="ignore"):
        return 1.0 / lam


def check_root_condition(omega, lags) -> None:
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if omega.size != len(lags):
        raise ParameterError(f"omega has {omega.size} values for overlap lags {tuple(lags)}")
    if not np.all(np.isfinite(omega)):
        raise ParameterError("omega must be finite")
    mod = root_moduli(omega, lags)
    if np.min(mod) <= 1.0:
        raise ParameterError(
            f"omega={omega.tolist()} violates the root condition (min root modulus {np.min(mod):.6g} <= 1)"
        )


@dataclass(frozen=True, eq=False)
class GlarmaParams:
    beta: np.ndarray
    psi: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        for name in ("beta", "psi", "omega"):
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def validate(self, spec: ModelSpec, r: int | None = None) -> None:
        overlap, union, L = lag_sets_partition(spec)
        if self.psi.size != L:
            raise ParameterError(f"psi has {self.psi.size} values, expected {L} for lags {union}")
        if r is not None and self.beta.size != r:
            raise ParameterError(f"beta has {self.beta.size} values, expected {r}")
        check_root_condition(self.omega, overlap)

    def root_moduli(self, spec: ModelSpec) -> np.ndarray:
        return root_moduli(self.omega, spec.overlap)


@dataclass(frozen=True, eq=False)
class GlarmaState:
    Z: np.ndarray
    W: np.ndarray
    e: np.ndarray
    pi: np.ndarray
    sigma2: np.ndarray


@dataclass(frozen=True, eq=False)
class GlarmaFit:
    params: GlarmaParams
    loglik: float
    cov: np.ndarray
    iterations: int

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


def _require_glarma(spec: ModelSpec) -> None:
    if spec.family != "glarma":
        raise ValidationError(f"expected a GLARMA spec, got family={spec.family!r}")


def recursion_arrays(spec: ModelSpec, psi, omega, r: int):
    """Lag/coefficient/parameter-index arrays consumed by the kernels."""
    overlap, union, _ = lag_sets_partition(spec)
    psi = np.asarray(psi, dtype=float)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    pos = {j: r + k for k, j in enumerate(union)}
    psi_of = {j: psi[k] for k, j in enumerate(union)}
    om_of = dict(zip(overlap, omega))
    zl, zc, zp = [], [], []
    for j in spec.j_phi:
        zl.append(j)
        if j in om_of:
            zc.append(om_of[j])
            zp.append(-1)
        else:
            zc.append(psi_of[j])
            zp.append(pos[j])
    el = list(union)
    ec = [psi_of[j] for j in union]
    ep = [pos[j] for j in union]
    return (
        np.array(zl, dtype=np.int64),
        np.array(zc, dtype=float),
        np.array(zp, dtype=np.int64),
        np.array(el, dtype=np.int64),
        np.array(ec, dtype=float),
        np.array(ep, dtype=np.int64),
    )


def _run_filter(series: BinomialSeries, params: GlarmaParams, spec: ModelSpec, order: int):
    r = series.r
    arrs = recursion_arrays(spec, params.psi, params.omega, r)
    with np.errstate(over="ignore", invalid="ignore"):  # non-finite states are reported below
        out = kernels.glarma_filter(
            series.y, series.m, series.X, params.beta, *arrs, spec.gamma, r + spec.L, order
        )
    if out[-1] != kernels.OK:
        raise NumericError("non-finite GLARMA state", index=int(out[-2]) + 1)
    return out


def recurse_state(series: BinomialSeries, params: GlarmaParams, spec: ModelSpec) -> GlarmaState:
    """Run the state recursion forward from zero pre-sample values."""
    _require_glarma(spec)
    params.validate(spec, series.r)
    _, _, _, Z, W, pi, s2, e, _, _, _ = _run_filter(series, params, spec, 0)
    return GlarmaState(Z=Z, W=W, e=e, pi=pi, sigma2=s2)


def state_derivatives(series: BinomialSeries, params: GlarmaParams, spec: ModelSpec) -> np.ndarray:
    """``dZ_t / d(beta, psi)`` as an ``n x (r + L)`` array."""
    _require_glarma(spec)
    params.validate(spec, series.r)
    return _run_filter(series, params, spec, 1)[8]


def tau_coefficients(omega, k_max: int, lags=None) -> np.ndarray:
    """Power-series coefficients of ``(1 - sum_j omega_j xi**j)**-1`` up to ``xi**k_max``.

    ``lags`` defaults to ``1..len(omega)``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    lags = tuple(range(1, omega.size + 1)) if lags is None else tuple(int(j) for j in lags)
    check_root_condition(omega, lags)
    tau = np.zeros(k_max + 1)
    tau[0] = 1.0
    for k in range(1, k_max + 1):
        tau[k] = sum(w * tau[k - j] for w, j in zip(omega, lags) if j <= k)
    return tau


def state_lyapunov(series: BinomialSeries, params: GlarmaParams, spec: ModelSpec) -> float:
    """Top Lyapunov exponent of the state recursion linearised in its own past.

    Perturbing ``Z_{t-j}`` moves ``e_{t-j}`` by ``de/dW``, so the perturbation
    follows ``dZ_t = sum_j a_j(t) dZ_{t-j}`` with ``a_j(t) = c_j + psi_j de_{t-j}/dW``.
    A positive exponent means the fitted filter forgets nothing: the
    likelihood and its derivatives then depend unstably on early observations.
    """
    st = recurse_state(series, params, spec)
    g = spec.gamma
    dedw = -st.sigma2 ** (1.0 - 0.5 * g) - 0.5 * g * (1.0 - 2.0 * st.pi) * st.e
    zl, zc, _, el, ec, _ = recursion_arrays(spec, params.psi, params.omega, series.r)
    p = int(max(np.max(zl, initial=0), np.max(el, initial=0)))
    if p == 0:
        return -np.inf
    n = series.n
    A = np.zeros((n, p))  # A[t, j-1] = a_j(t)
    for j, c in zip(zl, zc):
        A[:, j - 1] += c
    for j, c in zip(el, ec):
        A[j:, j - 1] += c * dedw[: n - j]
    if p == 1:
        with np.errstate(divide="ignore"):
            return float(np.mean(np.log(np.abs(A[:, 0]))))
    v = np.zeros(p)
    v[0] = 1.0
    total = 0.0
    for t in range(n):
        head = A[t] @ v
        v = np.concatenate(([head], v[:-1]))
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return -np.inf
        total += np.log(nv)
        v /= nv
    return float(total / n)


def loglik_and_derivs(series: BinomialSeries, params: GlarmaParams, spec: ModelSpec, order: int = 2):
    """Conditional log-likelihood with exact gradient and Hessian over ``(beta, psi)``."""
    _require_glarma(spec)
    params.validate(spec, series.r)
    ll, grad, hess, *_ = _run_filter(series, params, spec, order)
    return ll + log_binom_coef(series), grad, hess


def _newton_direction(grad, hess):
    neg = -hess
    try:
        c = np.linalg.cholesky(neg)
        return np.linalg.solve(c.T, np.linalg.solve(c, grad)), True
    except np.linalg.LinAlgError:
        pass
    # shift into positive definiteness; direction is still an ascent direction
    evals = np.linalg.eigvalsh(neg)
    shift = -evals[0] + 1e-6 * max(1.0, abs(evals[-1]))
    return np.linalg.solve(neg + shift * np.eye(neg.shape[0]), grad), False


def fit_glarma(
    series: BinomialSeries,
    spec: ModelSpec,
    omega_fixed=(),
    init: GlarmaParams | None = None,
    glm_fit: GlmFit | None = None,
) -> GlarmaFit:
    """Maximise the conditional likelihood over ``(beta, psi)`` with ``omega`` fixed.

    Newton-Raphson with up to 30 step halvings, starting from ``init`` or from
    the GLM estimate with ``psi = 0``. The returned covariance is the inverse
    observed information. An optimum whose observed information is not
    positive definite, or whose recursion is not invertible (see
    :func:`state_lyapunov`), raises :class:`FitError`.
    """
    _require_glarma(spec)
    spec.require_lags()
    omega = np.atleast_1d(np.asarray(omega_fixed, dtype=float))
    check_root_condition(omega, spec.overlap)
    r, L = series.r, spec.L
    if init is None:
        glm_fit = glm_fit or fit_glm(series)
        theta = np.concatenate([glm_fit.beta_hat, np.zeros(L)])
    else:
        theta = np.concatenate([init.beta, init.psi])

    def evaluate(th, order):
        p = GlarmaParams(th[:r], th[r:], omega)
        ll, g, h, *_ = _run_filter(series, p, spec, order)
        return ll, g, h

    ll, grad, hess = evaluate(theta, 2)
    it = 0
    converged = False
    for it in range(1, MAX_ITER + 1):
        step, _ = _newton_direction(grad, hess)
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            cand = theta + step
            try:
                ll_new, g_new, h_new = evaluate(cand, 2)
            except NumericError:
                step = step / 2
                continue
            if ll_new >= ll - 1e-12 * max(1.0, abs(ll)):
                accepted = True
                break
            step = step / 2
        if not accepted:
            break
        dll = ll_new - ll
        theta, ll, grad, hess = cand, ll_new, g_new, h_new
        if np.max(np.abs(grad)) <= GRAD_TOL and abs(dll) <= LOGLIK_TOL:
            converged = True
            break
    if not converged:
        last = GlarmaParams(theta[:r], theta[r:], omega)
        scale = max(1.0, float(np.max(np.abs(np.diag(hess)))))
        if np.max(np.abs(grad)) > 1e-7 * scale:
            raise ConvergenceError(
                f"GLARMA fit did not converge (max|grad|={np.max(np.abs(grad)):.3g})", last=last
            )
    try:
        c = np.linalg.cholesky(-hess)
    except np.linalg.LinAlgError:
        raise FitError("observed information is not positive definite at the optimum") from None
    params = GlarmaParams(theta[:r], theta[r:], omega)
    lyap = state_lyapunov(series, params, spec)
    if lyap > 0.0:
        raise FitError(f"fitted recursion is not invertible (Lyapunov exponent {lyap:.3g} > 0)")
    ci = np.linalg.inv(c)
    cov = ci.T @ ci
    return GlarmaFit(params=params, loglik=ll + log_binom_coef(series), cov=cov, iterations=it)


def simulate_glarma(m, X, params: GlarmaParams, spec: ModelSpec, seed: int, index: int = 0) -> BinomialSeries:
    """Forward-simulate ``y_t ~ Binomial(m_t, pi_t)`` through the state recursion.

    Draws are counts of uniforms below ``pi_t`` from the Philox stream
    ``(seed, index)``, so the result depends on nothing but its arguments.
    """
    _require_glarma(spec)
    m = np.asarray(m, dtype=np.int64)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = m.size
    if m.ndim == 0 or n != X.shape[0]:
        raise ValidationError("m and X must have the same number of rows")
    params.validate(spec, X.shape[1])
    zl, zc, _, el, ec, _ = recursion_arrays(spec, params.psi, params.omega, X.shape[1])
    U = uniforms(seed, index, n, int(m.max()))
    y = kernels.glarma_simulate(U, m, X @ params.beta, zl, zc, el, ec, spec.gamma)
    return BinomialSeries(y, m, X)
