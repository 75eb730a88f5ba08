"""Binomial time-series data and model lag specifications."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DesignError, ParseError, ValidationError

RANK_RTOL = 1e-10

RESIDUAL_TYPES = {"identity": 0, "pearson": 1, "score": 2}
FAMILIES = ("glarma", "barma")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BinomialSeries:
    """Successes ``y`` out of ``m`` trials at times 1..n with regressors ``X``.

    Arrays are copied and made read-only on construction. Row order is
    time order.
    """

    y: np.ndarray
    m: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y)
        m = np.asarray(self.m)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or m.shape != y.shape or X.ndim != 2 or X.shape[0] != y.size:
            raise ValidationError(
                f"shape mismatch: y{y.shape}, m{m.shape}, X{X.shape}"
            )
        for name, a in (("y", y), ("m", m)):
            if a.dtype.kind == "f":
                if not np.all(np.isfinite(a)) or np.any(a != np.round(a)):
                    bad = int(np.flatnonzero(~np.isfinite(a) | (a != np.round(a)))[0])
                    raise ValidationError(f"{name} must be integer valued", row=bad + 1)
            elif a.dtype.kind not in "iu":
                raise ValidationError(f"{name} must be integer valued")
        y = y.astype(np.int64)
        m = m.astype(np.int64)
        bad = np.flatnonzero(m < 1)
        if bad.size:
            raise ValidationError(f"m must be >= 1, got {m[bad[0]]}", row=int(bad[0]) + 1)
        bad = np.flatnonzero((y < 0) | (y > m))
        if bad.size:
            t = int(bad[0])
            raise ValidationError(f"need 0 <= y <= m, got y={y[t]}, m={m[t]}", row=t + 1)
        if not np.all(np.isfinite(X)):
            t = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
            raise ValidationError("non-finite regressor value", row=t + 1)
        n, r = X.shape
        if n <= r:
            raise DesignError(f"need n > r, got n={n}, r={r}")
        if r:
            sv = np.linalg.svd(X, compute_uv=False)
            rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv[0] > 0 else 0
            if rank < r:
                raise DesignError(f"regressor matrix has rank {rank} < {r}")
        object.__setattr__(self, "y", _frozen(y.copy()))
        object.__setattr__(self, "m", _frozen(m.copy()))
        object.__setattr__(self, "X", _frozen(np.ascontiguousarray(X).copy()))

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def r(self) -> int:
        return self.X.shape[1]

    def with_regressors(self, X: np.ndarray) -> "BinomialSeries":
        return BinomialSeries(self.y, self.m, X)

    def __eq__(self, other):
        if not isinstance(other, BinomialSeries):
            return NotImplemented
        return (
            np.array_equal(self.y, other.y)
            and np.array_equal(self.m, other.m)
            and np.array_equal(self.X, other.X)
        )

    __hash__ = None


def _lag_tuple(lags: Iterable[int] | None, name: str) -> tuple[int, ...]:
    if lags is None:
        return ()
    out = []
    for j in lags:
        if isinstance(j, (bool, np.bool_)) or int(j) != j:
            raise ValidationError(f"{name} lags must be integers, got {j!r}")
        out.append(int(j))
    if any(j < 1 for j in out):
        raise ValidationError(f"{name} lags must be positive, got {out}")
    if len(set(out)) != len(out):
        raise ValidationError(f"{name} lags contain duplicates: {out}")
    return tuple(sorted(out))


@dataclass(frozen=True)
class ModelSpec:
    """Lag sets of the AR (``j_phi``) and MA (``j_theta``) parts.

    ``gamma`` selects the residual scaling ``e_t = sigma_t**-gamma (y_t - m_t pi_t)``:
    0 identity, 1 Pearson, 2 score. Parameter vectors indexed by the union of
    lags are always in ascending lag order.
    """

    j_phi: tuple[int, ...] = ()
    j_theta: tuple[int, ...] = ()
    gamma: int = 1
    family: str = "glarma"

    def __post_init__(self):
        object.__setattr__(self, "j_phi", _lag_tuple(self.j_phi, "AR"))
        object.__setattr__(self, "j_theta", _lag_tuple(self.j_theta, "MA"))
        if self.gamma not in (0, 1, 2):
            raise ValidationError(f"gamma must be 0, 1 or 2, got {self.gamma!r}")
        fam = str(self.family).lower()
        if fam not in FAMILIES:
            raise ValidationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        object.__setattr__(self, "family", fam)

    @classmethod
    def glarma(cls, j_phi=(), j_theta=(), residuals: str | int = "pearson") -> "ModelSpec":
        gamma = RESIDUAL_TYPES[residuals] if isinstance(residuals, str) else residuals
        return cls(tuple(j_phi), tuple(j_theta), gamma, "glarma")

    @classmethod
    def barma(cls, j_phi=(), j_theta=()) -> "ModelSpec":
        return cls(tuple(j_phi), tuple(j_theta), 0, "barma")

    @property
    def overlap(self) -> tuple[int, ...]:
        return lag_sets_partition(self)[0]

    @property
    def union(self) -> tuple[int, ...]:
        return lag_sets_partition(self)[1]

    @property
    def L(self) -> int:
        return len(self.union)

    def require_lags(self) -> None:
        if not self.j_phi and not self.j_theta:
            raise ValidationError("at least one AR or MA lag is required")


def lag_sets_partition(spec: ModelSpec) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    """Return ``(overlap, union, psi_len)`` for the lag sets of ``spec``.

    ``overlap`` indexes the nuisance parameters and ``union`` the tested
    parameters, both ascending.
    """
    phi, theta = set(spec.j_phi), set(spec.j_theta)
    overlap = tuple(sorted(phi & theta))
    union = tuple(sorted(phi | theta))
    return overlap, union, len(union)


# ---------------------------------------------------------------------------
# CSV


@dataclass(frozen=True)
class CsvSchema:
    """Column names for :func:`load_csv`. ``x`` of ``None`` means all ``x<k>`` columns."""

    y: str = "y"
    m: str = "m"
    x: Sequence[str] | None = None
    intercept: bool = False


def _regressor_columns(header: list[str]) -> list[str]:
    cols = []
    for h in header:
        if len(h) > 1 and h[0] == "x" and h[1:].isdigit():
            cols.append(h)
    return sorted(cols, key=lambda h: int(h[1:]))


def load_csv(path, schema: CsvSchema | None = None, *, intercept: bool | None = None) -> BinomialSeries:
    """Read a series from a CSV file with header ``y,m,x1..xr``.

    With ``intercept`` a constant column is prepended to the regressors.
    Errors name the 1-based data row.
    """
    schema = schema or CsvSchema()
    if intercept is None:
        intercept = schema.intercept
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path} is empty") from None
        xcols = list(schema.x) if schema.x is not None else _regressor_columns(header)
        missing = [c for c in (schema.y, schema.m, *xcols) if c not in header]
        if missing:
            raise ValidationError(f"missing columns {missing} in {path}")
        iy, im = header.index(schema.y), header.index(schema.m)
        ix = [header.index(c) for c in xcols]
        ys, ms, xs = [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=row_no)
            ys.append(_parse_int(row[iy], schema.y, row_no))
            ms.append(_parse_int(row[im], schema.m, row_no))
            xs.append([_parse_float(row[i], header[i], row_no) for i in ix])
    if not ys:
        raise ValidationError(f"{path} has no data rows")
    X = np.array(xs, dtype=float).reshape(len(ys), len(ix))
    if intercept:
        X = np.column_stack([np.ones(len(ys)), X])
    return BinomialSeries(np.array(ys, dtype=np.int64), np.array(ms, dtype=np.int64), X)


def _parse_int(text: str, col: str, row: int) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {col}={text!r} as a number", row=row) from None
    if not math.isfinite(v) or v != int(v):
        raise ParseError(f"{col}={text!r} is not an integer", row=row)
    return int(v)


def _parse_float(text: str, col: str, row: int) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ParseError(f"cannot parse {col}={text!r} as a number", row=row) from None


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def save_csv(series: BinomialSeries, path) -> None:
    """Write ``series`` with header ``y,m,x1..xr`` to a path or open text file;
    reals use 17 significant digits."""
    if hasattr(path, "write"):
        _write_rows(series, path)
        return
    with Path(path).open("w", newline="") as fh:
        _write_rows(series, fh)


def _write_rows(series: BinomialSeries, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["y", "m"] + [f"x{k + 1}" for k in range(series.r)])
    for t in range(series.n):
        w.writerow([int(series.y[t]), int(series.m[t])] + [format_float(v) for v in series.X[t]])
