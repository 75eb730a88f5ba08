"""Portmanteau, likelihood-ratio and Wald tests for GLARMA dependence."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import BinomialSeries, ModelSpec
from .errors import BinseqError, DegenerateError, NumericError, ValidationError
from .glarma import GlarmaFit, fit_glarma
from .glm import GlmFit, fit_glm
from .score_glarma import NuisanceGrid, TestResult, chi2_pvalue, info_matrix, nuisance_points


@dataclass(frozen=True, eq=False)
class AcfEstimates:
    C: np.ndarray  # lags 0..L
    r: np.ndarray  # lags 1..L


def pearson_acf(series: BinomialSeries, glmfit: GlmFit, max_lag: int) -> AcfEstimates:
    """Uncentred autocovariances ``C(l) = n^-1 sum e_t e_{t-l}`` of Pearson residuals."""
    n = series.n
    e = glmfit.residuals(series, 1)
    C = np.array([e[l:] @ e[: n - l] for l in range(max_lag + 1)]) / n
    if not C[0] > 0.0:
        raise DegenerateError("Pearson residuals are identically zero")
    r = C[1:] / C[0]
    if np.any(np.abs(r) > 1.0 + 1e-12):
        raise NumericError("autocorrelation outside [-1, 1]")
    return AcfEstimates(C=C, r=r)


def blp_stat(series: BinomialSeries, glmfit: GlmFit, L: int) -> TestResult:
    """Box-Pierce-Ljung ``n(n+2) sum_l r(l)^2 / (n-l)`` on Pearson residuals."""
    n = series.n
    if not 1 <= L < n / 2:
        raise ValidationError(f"need 1 <= L < n/2, got L={L}, n={n}")
    acf = pearson_acf(series, glmfit, L)
    lags = np.arange(1, L + 1)
    q = float(n * (n + 2) * np.sum(acf.r**2 / (n - lags)))
    return TestResult(statistic=q, df=L, p_value=chi2_pvalue(q, L), method="box-pierce-ljung",
                      extra={"acf": acf.r.tolist()})


def _regular(spec: ModelSpec) -> bool:
    return not spec.overlap


def lrt_stat(series: BinomialSeries, spec: ModelSpec, omega_fixed=(), glm_fit: GlmFit | None = None,
             alt_fit: GlarmaFit | None = None) -> TestResult:
    """``2 [l(alt) - l(null)]`` with ``omega`` held at ``omega_fixed``."""
    glm_fit = glm_fit or fit_glm(series)
    alt_fit = alt_fit or fit_glarma(series, spec, omega_fixed, glm_fit=glm_fit)
    q = max(0.0, 2.0 * (alt_fit.loglik - glm_fit.loglik))
    regular = _regular(spec)
    return TestResult(
        statistic=q,
        df=spec.L,
        p_value=chi2_pvalue(q, spec.L),
        method="lrt-glarma",
        omega_argmax=tuple(float(w) for w in alt_fit.params.omega) or None,
        extra={"regular": regular, "psi_hat": alt_fit.params.psi.tolist()},
    )


def wald_stat(series: BinomialSeries, spec: ModelSpec, omega_fixed=(), glm_fit: GlmFit | None = None,
              alt_fit: GlarmaFit | None = None, covariance: str = "observed") -> TestResult:
    """Wald statistic for ``psi = 0`` at fixed ``omega``.

    ``covariance="observed"`` inverts the ``psi`` block of the inverse observed
    information of the alternative fit (its marginal covariance).
    ``covariance="null"`` uses ``n psi' I_L psi`` with the null information of
    :func:`binseq.score_glarma.info_matrix`.
    """
    glm_fit = glm_fit or fit_glm(series)
    alt_fit = alt_fit or fit_glarma(series, spec, omega_fixed, glm_fit=glm_fit)
    psi = alt_fit.params.psi
    if covariance == "null":
        omega = alt_fit.params.omega if spec.overlap else 0.0
        I = info_matrix(series, glm_fit, spec, omega)
        q = float(series.n * psi @ I @ psi)
    elif covariance == "observed":
        r = series.r
        V = alt_fit.cov[r:, r:]
        q = float(psi @ np.linalg.solve(V, psi))
    else:
        raise ValidationError(f"covariance must be 'null' or 'observed', got {covariance!r}")
    return TestResult(
        statistic=q,
        df=spec.L,
        p_value=chi2_pvalue(q, spec.L),
        method="wald-glarma",
        omega_argmax=tuple(float(w) for w in alt_fit.params.omega) or None,
        extra={"regular": _regular(spec), "psi_hat": psi.tolist(), "covariance": covariance},
    )


def glarma_sweep(series: BinomialSeries, spec: ModelSpec, grid: NuisanceGrid, glm_fit: GlmFit | None = None):
    """Fit the alternative at every grid point, warm-starting from the previous
    solution and retrying cold on failure. Returns ``(points, fits)`` with
    ``None`` for points that failed both ways."""
    glm_fit = glm_fit or fit_glm(series)
    pts = nuisance_points(spec, grid)
    fits: list[GlarmaFit | None] = []
    prev = None
    for p in pts:
        fit = None
        for init in ((prev,) if prev is not None else ()) + (None,):
            try:
                fit = fit_glarma(series, spec, p, init=init, glm_fit=glm_fit)
                break
            except BinseqError:
                continue
        fits.append(fit)
        if fit is not None:
            prev = fit.params
    return pts, fits


def _sup(values, pts, method, spec, grid, failures) -> TestResult:
    vals = np.array([np.nan if v is None else v for v in values])
    ok = np.isfinite(vals)
    if not ok.any():
        raise NumericError(f"{method}: alternative fit failed at every grid point")
    if failures:
        warnings.warn(f"{method}: {failures} grid points failed", RuntimeWarning, stacklevel=3)
    k = int(np.argmax(np.where(ok, vals, -np.inf)))
    return TestResult(
        statistic=float(vals[k]),
        df=spec.L,
        p_value=None,
        method=method,
        omega_argmax=tuple(float(w) for w in pts[k]),
        per_omega=[(tuple(float(w) for w in p), None if not np.isfinite(v) else float(v)) for p, v in zip(pts, vals)],
        extra={"grid": str(grid), "failures": failures, "p_value_kind": "monte-carlo-required"},
    )


def sup_lrt(series: BinomialSeries, spec: ModelSpec, grid: NuisanceGrid | None = None,
            glm_fit: GlmFit | None = None, sweep=None) -> TestResult:
    """Largest likelihood-ratio statistic over the nuisance grid."""
    grid = grid or NuisanceGrid()
    glm_fit = glm_fit or fit_glm(series)
    pts, fits = sweep or glarma_sweep(series, spec, grid, glm_fit)
    vals = [None if f is None else lrt_stat(series, spec, p, glm_fit, f).statistic for p, f in zip(pts, fits)]
    return _sup(vals, pts, "sup-lrt-glarma", spec, grid, sum(f is None for f in fits))


def sup_wald(series: BinomialSeries, spec: ModelSpec, grid: NuisanceGrid | None = None,
             glm_fit: GlmFit | None = None, sweep=None, covariance: str = "observed") -> TestResult:
    """Largest Wald statistic over the nuisance grid."""
    grid = grid or NuisanceGrid()
    glm_fit = glm_fit or fit_glm(series)
    pts, fits = sweep or glarma_sweep(series, spec, grid, glm_fit)
    vals = []
    failures = 0
    for p, f in zip(pts, fits):
        if f is None:
            vals.append(None)
            failures += 1
            continue
        try:
            vals.append(wald_stat(series, spec, p, glm_fit, f, covariance).statistic)
        except BinseqError:
            vals.append(None)
            failures += 1
    return _sup(vals, pts, "sup-wald-glarma", spec, grid, failures)
