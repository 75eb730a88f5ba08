"""Score test against BARMA alternatives (lagged counts and identity residuals).

The score and information carry ``n**-1/2`` and ``n**-1`` factors so that the
blocks are on the same scale as the GLARMA statistics; the quadratic form is
unaffected. The regression/AR cross block uses the lagged means
``m_{t-j} pi_{t-j}`` over the AR lags; MA rows of that block are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import BinomialSeries, ModelSpec
from .errors import SingularityError, ValidationError
from .glm import GlmFit
from .score_glarma import TestResult, chi2_pvalue

SCHUR_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class BarmaScoreParts:
    s_phi: np.ndarray | None = None
    s_theta: np.ndarray | None = None
    E: np.ndarray | None = None
    F: np.ndarray | None = None
    G: np.ndarray | None = None

    @property
    def score(self) -> np.ndarray:
        return np.concatenate([self.s_phi, self.s_theta])

    def schur(self) -> np.ndarray:
        """``G - F E^{-1} F'``, exactly symmetric."""
        c = np.linalg.cholesky(self.E)
        A = np.linalg.solve(c, self.F.T)
        S = self.G - A.T @ A
        return _symmetrize(S)


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return np.triu(M) + np.triu(M, 1).T


def _require_barma(spec: ModelSpec) -> None:
    if spec.family != "barma":
        raise ValidationError(f"expected a BARMA spec, got family={spec.family!r}")
    spec.require_lags()


def _lagged(a: np.ndarray, j: int) -> np.ndarray:
    out = np.zeros_like(a, dtype=float)
    out[j:] = a[: a.size - j]
    return out


def barma_score_vector(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec) -> BarmaScoreParts:
    """Score for the AR (lagged counts) and MA (lagged identity residuals) terms."""
    _require_barma(spec)
    n = series.n
    eI = glmfit.residuals(series)
    y = series.y.astype(float)
    rn = 1.0 / np.sqrt(n)
    s_phi = np.array([eI @ _lagged(y, j) for j in spec.j_phi]) * rn
    s_theta = np.array([eI @ _lagged(eI, j) for j in spec.j_theta]) * rn
    return BarmaScoreParts(s_phi=s_phi.reshape(-1), s_theta=s_theta.reshape(-1))


def barma_info(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec) -> BarmaScoreParts:
    """Blocks ``E`` (regression), ``F`` (dependence x regression), ``G`` (dependence)."""
    _require_barma(spec)
    n, r = series.n, series.r
    s2 = glmfit.sigma2
    mpi = series.m * glmfit.pi
    lags = list(spec.j_phi) + list(spec.j_theta)
    p = len(spec.j_phi)
    # stacked means of [x_t; Y_{t-J_phi}; e_{t-J_theta}]
    mean = np.zeros((n, r + len(lags)))
    mean[:, :r] = series.X
    for k, j in enumerate(spec.j_phi):
        mean[:, r + k] = _lagged(mpi, j)
    M = (mean * s2[:, None]).T @ mean
    # conditional covariances of the lagged terms: sigma^2_{t-l} on equal lags
    for l in set(lags):
        rows = [r + k for k, j in enumerate(lags) if j == l]
        w = float(s2 @ _lagged(s2, l))
        for a in rows:
            for b in rows:
                M[a, b] += w
    M = _symmetrize(M / n)
    return BarmaScoreParts(E=M[:r, :r], F=M[r:, :r], G=M[r:, r:])


def _degenerate_design(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec) -> bool:
    # constant trials and constant means make the overlap directions unidentified
    if not set(spec.j_phi) & set(spec.j_theta):
        return False
    pi = glmfit.pi
    return bool(np.all(series.m == series.m[0]) and np.ptp(pi) <= 1e-12 * max(1.0, abs(pi[0])))


def barma_stat(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec) -> TestResult:
    """``s' (G - F E^{-1} F')^{-1} s`` referred to chi-square with ``|J_phi| + |J_theta|`` df."""
    _require_barma(spec)
    if _degenerate_design(series, glmfit, spec):
        raise SingularityError(
            "constant trials and constant fitted means with shared AR/MA lags: information is singular"
        )
    sc = barma_score_vector(series, glmfit, spec)
    info = barma_info(series, glmfit, spec)
    schur = info.schur()
    ev = np.linalg.eigvalsh(schur)
    if not np.all(np.isfinite(ev)) or ev[0] <= SCHUR_RTOL * max(ev[-1], 0.0):
        raise SingularityError(f"Schur complement is not positive definite (eigenvalues {ev[0]:.3g}..{ev[-1]:.3g})")
    s = sc.score
    c = np.linalg.cholesky(schur)
    z = np.linalg.solve(c, s)
    q = float(z @ z)
    df = s.size
    return TestResult(
        statistic=q,
        df=df,
        p_value=chi2_pvalue(q, df),
        method="score-barma",
        extra={"phi_lags": list(spec.j_phi), "theta_lags": list(spec.j_theta)},
    )
