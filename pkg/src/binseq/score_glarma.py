"""Score tests against GLARMA alternatives, fixed or supremum over nuisance.

All quantities are evaluated at the GLM fit. The score is scaled by
``n**-1/2`` and the information by ``n**-1``; pre-sample residuals and
variances are zero, which makes :func:`info_matrix` the exact null covariance
of :func:`score_vector` when the GLM parameters are known.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize, stats

from . import kernels
from .dataset import BinomialSeries, ModelSpec, lag_sets_partition
from .errors import NumericError, ParameterError, SingularityError, ValidationError
from .glarma import check_root_condition, root_moduli
from .glm import GlmFit

PSD_JITTER = 1e-10


@dataclass(frozen=True)
class NuisanceGrid:
    """Equally spaced nuisance values ``lower, lower + step, ..., upper``."""

    lower: float = -0.9
    upper: float = 0.9
    step: float = 0.1

    def __post_init__(self):
        lo, hi, st = float(self.lower), float(self.upper), float(self.step)
        if not (-1.0 < lo <= hi < 1.0):
            raise ValidationError(f"grid needs -1 < lower <= upper < 1, got [{lo}, {hi}]")
        if not st > 0.0:
            raise ValidationError(f"grid step must be positive, got {st}")

    @property
    def points(self) -> np.ndarray:
        k = int(math.floor((self.upper - self.lower) / self.step + 1e-9))
        pts = np.round(self.lower + self.step * np.arange(k + 1), 12)
        if self.upper - pts[-1] > 1e-9:
            pts = np.append(pts, self.upper)
        return pts

    @classmethod
    def parse(cls, text: str) -> "NuisanceGrid":
        """Parse ``lo:hi:step``."""
        try:
            lo, hi, st = (float(v) for v in text.split(":"))
        except ValueError:
            raise ValidationError(f"omega grid must look like lo:hi:step, got {text!r}") from None
        return cls(lo, hi, st)

    @classmethod
    def single(cls, value: float) -> "NuisanceGrid":
        return cls(value, value, 1.0)

    def __str__(self) -> str:
        return f"{self.lower:g}:{self.upper:g}:{self.step:g}"


@dataclass
class TestResult:
    """Outcome of a test. ``p_value`` is ``None`` when no reference
    distribution is available and Monte Carlo calibration is required."""

    statistic: float
    df: int
    p_value: float | None
    method: str
    omega_argmax: tuple[float, ...] | None = None
    per_omega: list[tuple[tuple[float, ...], float]] | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "method": self.method,
            "statistic": float(self.statistic),
            "df": int(self.df),
            "p_value": None if self.p_value is None else float(self.p_value),
        }
        if self.omega_argmax is not None:
            out["omega_argmax"] = [float(w) for w in self.omega_argmax]
        if self.per_omega is not None:
            out["per_omega"] = [
                {"omega": [float(w) for w in om], "statistic": None if q is None else float(q)}
                for om, q in self.per_omega
            ]
        out.update(self.extra)
        return out


def chi2_pvalue(stat: float, df: int) -> float:
    return float(min(1.0, max(0.0, stats.chi2.sf(stat, df))))


def null_pieces(series: BinomialSeries, glmfit: GlmFit, gamma: int):
    """``(e_I, e, sigma^2, sigma^(2 - 2 gamma))`` at the GLM fit."""
    s2 = glmfit.sigma2
    eI = glmfit.residuals(series)
    e = eI * s2 ** (-0.5 * gamma) if gamma else eI.astype(float)
    v = s2 ** (1.0 - gamma) if gamma != 1 else np.ones_like(s2)
    return eI.astype(float), e, s2, v


def _profile(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec, omegas: np.ndarray):
    if spec.family != "glarma":
        raise ValidationError("GLARMA score test needs a GLARMA spec")
    spec.require_lags()
    overlap, union, _ = lag_sets_partition(spec)
    eI, e, s2, v = null_pieces(series, glmfit, spec.gamma)
    return kernels.score_profile(
        eI,
        e,
        s2,
        v,
        np.array(union, dtype=np.int64),
        np.array(overlap, dtype=np.int64),
        np.ascontiguousarray(omegas, dtype=float),
    )


def _one_omega(omega, spec: ModelSpec) -> np.ndarray:
    overlap = spec.overlap
    om = np.atleast_1d(np.asarray(omega, dtype=float)).ravel()
    if om.size == 1 and len(overlap) > 1:
        om = np.repeat(om, len(overlap))
    if len(overlap) == 0:
        if om.size and np.any(om != 0.0):
            raise ParameterError("omega given but AR and MA lags do not overlap")
        return np.zeros((1, 0))
    check_root_condition(om, overlap)
    return om.reshape(1, -1)


def score_vector(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec, omega=0.0) -> np.ndarray:
    """Scaled score for ``psi`` at ``psi = 0`` and fixed ``omega`` (length L)."""
    _, S, _ = _profile(series, glmfit, spec, _one_omega(omega, spec))
    return S[0]


def info_matrix(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec, omega=0.0) -> np.ndarray:
    """Null information for ``psi`` at fixed ``omega`` (``L x L``, scaled by 1/n)."""
    _, _, I = _profile(series, glmfit, spec, _one_omega(omega, spec))
    I = I[0]
    _check_psd(I)
    return I


def _check_psd(I: np.ndarray) -> None:
    if not np.all(np.isfinite(I)):
        raise NumericError("information matrix is not finite")
    ev = np.linalg.eigvalsh(I)
    if ev[0] < -PSD_JITTER * max(1.0, abs(ev[-1])):
        raise NumericError(f"information matrix is not positive semidefinite (min eigenvalue {ev[0]:.3g})")


def quadratic_form(S: np.ndarray, I: np.ndarray) -> float:
    """``S' I^{-1} S`` via Cholesky, falling back to a pseudo-inverse with a warning."""
    try:
        c = np.linalg.cholesky(I)
        z = np.linalg.solve(c, S)
        return float(z @ z)
    except np.linalg.LinAlgError:
        pass
    if not np.any(I):
        raise SingularityError("information matrix is zero")
    warnings.warn("information matrix is not positive definite; using pseudo-inverse", RuntimeWarning, stacklevel=3)
    return float(S @ np.linalg.pinv(I, hermitian=True) @ S)


def score_stat(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec, omega=0.0) -> TestResult:
    """Score statistic at fixed ``omega``, referred to chi-square with L df."""
    om = _one_omega(omega, spec)
    _, S, I = _profile(series, glmfit, spec, om)
    _check_psd(I[0])
    q = quadratic_form(S[0], I[0])
    L = spec.L
    return TestResult(
        statistic=q,
        df=L,
        p_value=chi2_pvalue(q, L),
        method="score-glarma",
        omega_argmax=tuple(om[0]) if om.shape[1] else None,
        extra={"lags": list(spec.union), "residuals": spec.gamma},
    )


def q0_closed_form(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec) -> float:
    """``sum_l n * C(l)**2 / B(l)`` from lagged residual cross-products.

    Equals :func:`score_stat` at ``omega = 0``.
    """
    n = series.n
    g = spec.gamma
    eI = glmfit.residuals(series)
    s2 = glmfit.sigma2
    total = 0.0
    for j in spec.union:
        C = np.sum(s2[: n - j] ** (-0.5 * g) * eI[j:] * eI[: n - j]) / n
        B = np.sum(s2[j:] * s2[: n - j] ** (1.0 - g)) / n
        total += n * C * C / B
    return float(total)


def davies_applies(spec: ModelSpec) -> bool:
    """The closed-form tail bound covers one tested lag shared by AR and MA,
    with Pearson residuals."""
    overlap, union, _ = lag_sets_partition(spec)
    return len(union) == 1 and overlap == union and spec.gamma == 1


def nuisance_points(spec: ModelSpec, grid: NuisanceGrid) -> np.ndarray:
    """Grid points (one row per point), product grid over several overlap lags."""
    overlap = spec.overlap
    K = len(overlap)
    if K == 0:
        raise ValidationError("no overlapping AR/MA lags: use score_stat at omega = 0")
    pts = grid.points
    if K == 1:
        return pts[:, None]
    rows = [p for p in itertools.product(pts, repeat=K) if np.min(root_moduli(p, overlap)) > 1.0]
    if not rows:
        raise ParameterError("no grid point satisfies the root condition")
    return np.array(rows)


def sup_score(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec, grid: NuisanceGrid | None = None) -> TestResult:
    """Maximum of the score statistic over the nuisance grid.

    Ties go to the first (smallest) grid point. The Davies bound is reported
    as a conservative p-value when :func:`davies_applies`, otherwise the
    p-value is ``None``.
    """
    grid = grid or NuisanceGrid()
    pts = nuisance_points(spec, grid)
    Q, _, _ = _profile(series, glmfit, spec, pts)
    ok = np.isfinite(Q)
    failures = int(np.count_nonzero(~ok))
    if not ok.any():
        raise NumericError("score statistic failed at every grid point")
    if failures:
        warnings.warn(f"score statistic failed at {failures} grid points", RuntimeWarning, stacklevel=2)
    Qm = np.where(ok, Q, -np.inf)
    k = int(np.argmax(Qm))
    stat = float(Q[k])
    pval = None
    if davies_applies(spec):
        pval = davies_tail_bound(stat, grid.lower, grid.upper)
    return TestResult(
        statistic=stat,
        df=spec.L,
        p_value=pval,
        method="sup-score-glarma",
        omega_argmax=tuple(float(w) for w in pts[k]),
        per_omega=[(tuple(float(w) for w in p), float(q) if np.isfinite(q) else None) for p, q in zip(pts, Q)],
        extra={
            "grid": str(grid),
            "failures": failures,
            "p_value_kind": "davies-bound" if pval is not None else "monte-carlo-required",
        },
    )


def score_profile_values(series: BinomialSeries, glmfit: GlmFit, spec: ModelSpec, omegas) -> np.ndarray:
    """Score statistics at each row of ``omegas`` (no validation, used in simulation loops)."""
    K = len(spec.overlap)
    om = np.asarray(omegas, dtype=float).reshape(-1, K) if K else np.zeros((1, 0))
    Q, _, _ = _profile(series, glmfit, spec, om)
    return Q


def davies_tail_bound(u: float, omega_l: float, omega_u: float) -> float:
    """Upper bound on ``P(sup Q > u)`` over ``[omega_l, omega_u]``:
    ``P(chi2_1 > u) + exp(-u/2) / (2 pi) * [log((1+w)/(1-w))]``, clamped to [0, 1]."""
    if not (-1.0 < omega_l <= omega_u < 1.0):
        raise ValidationError(f"need -1 < omega_l <= omega_u < 1, got [{omega_l}, {omega_u}]")
    return float(min(1.0, max(0.0, _davies_raw(u, omega_l, omega_u))))


def _davies_raw(u: float, omega_l: float, omega_u: float) -> float:
    width = math.atanh(omega_u) - math.atanh(omega_l)
    return float(stats.chi2.sf(u, 1)) + math.exp(-0.5 * u) * width / math.pi


def davies_quantile(alpha: float, omega_l: float, omega_u: float) -> float:
    """Solve ``F(u) = alpha`` for the Davies bound by bisection on [0, 200]."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if not (-1.0 < omega_l <= omega_u < 1.0):
        raise ValidationError(f"need -1 < omega_l <= omega_u < 1, got [{omega_l}, {omega_u}]")
    lo, hi = 0.0, 200.0
    if _davies_raw(hi, omega_l, omega_u) > alpha:
        raise ValidationError(f"alpha={alpha} is below the bound at u={hi}")
    root = optimize.bisect(
        lambda u: _davies_raw(u, omega_l, omega_u) - alpha, lo, hi, xtol=1e-10, maxiter=200
    )
    return float(root)
