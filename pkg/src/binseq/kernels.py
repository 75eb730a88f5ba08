"""Hot loops: GLARMA filtering with derivatives, score profiles, simulation.

Every kernel has an explicit-loop version compiled by numba (suffix ``_nb``)
and a vectorised numpy/scipy version (suffix ``_np``). The public names
dispatch on :data:`binseq._accel.USE_NUMBA`; both versions are importable so
tests and the benchmark can compare them directly.

Conventions shared by all kernels
---------------------------------
Time index ``t`` runs over ``0..n-1``; a lag ``j`` refers to ``t - j`` and
terms with ``t - j < 0`` are zero (pre-sample states and residuals are zero).

The state recursion is written generically as::

    Z_t = sum_k zcoef[k] * Z_{t - zlags[k]} + sum_k ecoef[k] * e_{t - elags[k]}

where ``zpar[k]`` / ``epar[k]`` give the position of the coefficient in the
free-parameter vector ``(beta, psi)``, or ``-1`` when the coefficient is held
fixed (the nuisance ``omega``).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

from ._accel import USE_NUMBA, njit

# status codes returned by kernels (numba cannot raise rich exceptions)
OK = 0
NONFINITE = 1
SINGULAR = 2


# ---------------------------------------------------------------------------
# logistic helpers


def _expit_pair_py(w):
    # (pi, 1 - pi) without cancellation
    if w >= 0.0:
        ez = math.exp(-w)
        return 1.0 / (1.0 + ez), ez / (1.0 + ez)
    ez = math.exp(w)
    return ez / (1.0 + ez), 1.0 / (1.0 + ez)


def _softplus_py(w):
    if w > 0.0:
        return w + math.log1p(math.exp(-w))
    return math.log1p(math.exp(w))


def _scale_py(v, g):
    # v ** (-g / 2) with inf instead of ZeroDivisionError at v == 0
    if g == 0.0:
        return 1.0
    if v <= 0.0:
        return math.inf
    return v ** (-0.5 * g)


_expit_pair = njit(_expit_pair_py)
_softplus = njit(_softplus_py)
_scale = njit(_scale_py)


def expit_pair(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(pi, 1 - pi)`` for the logistic link, saturation-safe."""
    w = np.asarray(w, dtype=float)
    ez = np.exp(-np.abs(w))
    big = 1.0 / (1.0 + ez)
    small = ez / (1.0 + ez)
    pos = w >= 0
    return np.where(pos, big, small), np.where(pos, small, big)


def softplus(w: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, w)


# ---------------------------------------------------------------------------
# GLARMA filter with analytic derivatives


@njit
def glarma_filter_nb(y, m, X, beta, zlags, zcoef, zpar, elags, ecoef, epar, gamma, npar, order):
    n, r = X.shape
    Z = np.zeros(n)
    W = np.zeros(n)
    pi = np.zeros(n)
    s2 = np.zeros(n)
    e = np.zeros(n)
    dZ = np.zeros((n, npar))
    de = np.zeros((n, npar))
    n2 = n if order >= 2 else 0
    d2Z = np.zeros((n2, npar, npar))
    d2e = np.zeros((n2, npar, npar))
    grad = np.zeros(npar)
    hess = np.zeros((npar, npar))
    dW = np.zeros(npar)
    ll = 0.0
    g = float(gamma)
    for t in range(n):
        xb = 0.0
        for k in range(r):
            xb += X[t, k] * beta[k]
        z = 0.0
        for k in range(zlags.size):
            s = t - zlags[k]
            if s >= 0:
                z += zcoef[k] * Z[s]
        for k in range(elags.size):
            s = t - elags[k]
            if s >= 0:
                z += ecoef[k] * e[s]
        w = xb + z
        Z[t] = z
        W[t] = w
        p, q = _expit_pair(w)
        pi[t] = p
        v = m[t] * p * q
        s2[t] = v
        eI = y[t] * q - (m[t] - y[t]) * p
        sg = _scale(v, g)
        et = eI * sg
        e[t] = et
        ll += y[t] * w - m[t] * _softplus(w)
        if not (math.isfinite(w) and math.isfinite(et) and math.isfinite(ll)):
            return ll, grad, hess, Z, W, pi, s2, e, dZ, t, NONFINITE
        if order < 1:
            continue
        for k in range(zlags.size):
            s = t - zlags[k]
            if s >= 0:
                c = zcoef[k]
                for a in range(npar):
                    dZ[t, a] += c * dZ[s, a]
                if zpar[k] >= 0:
                    dZ[t, zpar[k]] += Z[s]
        for k in range(elags.size):
            s = t - elags[k]
            if s >= 0:
                c = ecoef[k]
                for a in range(npar):
                    dZ[t, a] += c * de[s, a]
                if epar[k] >= 0:
                    dZ[t, epar[k]] += e[s]
        for a in range(npar):
            dW[a] = dZ[t, a]
        for k in range(r):
            dW[k] += X[t, k]
        e1 = -v * sg - 0.5 * g * (1.0 - 2.0 * p) * et
        for a in range(npar):
            de[t, a] = e1 * dW[a]
            grad[a] += eI * dW[a]
        if order < 2:
            continue
        for k in range(zlags.size):
            s = t - zlags[k]
            if s >= 0:
                c = zcoef[k]
                for a in range(npar):
                    for b in range(npar):
                        d2Z[t, a, b] += c * d2Z[s, a, b]
                j = zpar[k]
                if j >= 0:
                    for a in range(npar):
                        d2Z[t, j, a] += dZ[s, a]
                        d2Z[t, a, j] += dZ[s, a]
        for k in range(elags.size):
            s = t - elags[k]
            if s >= 0:
                c = ecoef[k]
                for a in range(npar):
                    for b in range(npar):
                        d2Z[t, a, b] += c * d2e[s, a, b]
                j = epar[k]
                if j >= 0:
                    for a in range(npar):
                        d2Z[t, j, a] += de[s, a]
                        d2Z[t, a, j] += de[s, a]
        e2 = (
            -(1.0 - 0.5 * g) * v * sg * (1.0 - 2.0 * p)
            + g * p * q * et
            - 0.5 * g * (1.0 - 2.0 * p) * e1
        )
        for a in range(npar):
            for b in range(npar):
                d2e[t, a, b] = e2 * dW[a] * dW[b] + e1 * d2Z[t, a, b]
                hess[a, b] += eI * d2Z[t, a, b] - v * dW[a] * dW[b]
    return ll, grad, hess, Z, W, pi, s2, e, dZ, -1, OK


def glarma_filter_np(y, m, X, beta, zlags, zcoef, zpar, elags, ecoef, epar, gamma, npar, order):
    n, r = X.shape
    xb = X @ beta
    Z = np.zeros(n)
    W = np.zeros(n)
    pi = np.zeros(n)
    s2 = np.zeros(n)
    e = np.zeros(n)
    dZ = np.zeros((n, npar))
    de = np.zeros((n, npar))
    d2Z = np.zeros((n if order >= 2 else 0, npar, npar))
    d2e = np.zeros_like(d2Z)
    grad = np.zeros(npar)
    hess = np.zeros((npar, npar))
    g = float(gamma)
    ll = 0.0
    yf = y.astype(float)
    mf = m.astype(float)
    Xpad = np.zeros((n, npar))
    Xpad[:, :r] = X
    zlags, elags = np.asarray(zlags), np.asarray(elags)
    for t in range(n):
        zs, es = t - zlags, t - elags
        zok, eok = zs >= 0, es >= 0
        z = np.dot(zcoef[zok], Z[zs[zok]]) + np.dot(ecoef[eok], e[es[eok]])
        w = xb[t] + z
        Z[t], W[t] = z, w
        p, q = _expit_pair_py(w)
        v = mf[t] * p * q
        eI = yf[t] * q - (mf[t] - yf[t]) * p
        sg = _scale_py(v, g)
        et = eI * sg
        pi[t], s2[t], e[t] = p, v, et
        ll += yf[t] * w - mf[t] * _softplus_py(w)
        if not (math.isfinite(w) and math.isfinite(et) and math.isfinite(ll)):
            return ll, grad, hess, Z, W, pi, s2, e, dZ, t, NONFINITE
        if order < 1:
            continue
        zi, ei = np.flatnonzero(zok), np.flatnonzero(eok)
        dz = zcoef[zi] @ dZ[zs[zi]] + ecoef[ei] @ de[es[ei]]
        for k in zi:
            if zpar[k] >= 0:
                dz[zpar[k]] += Z[zs[k]]
        for k in ei:
            if epar[k] >= 0:
                dz[epar[k]] += e[es[k]]
        dZ[t] = dz
        dW = dz + Xpad[t]
        e1 = -v * sg - 0.5 * g * (1.0 - 2.0 * p) * et
        de[t] = e1 * dW
        grad += eI * dW
        if order < 2:
            continue
        d2 = np.tensordot(zcoef[zi], d2Z[zs[zi]], axes=1) + np.tensordot(ecoef[ei], d2e[es[ei]], axes=1)
        for k in zi:
            j = zpar[k]
            if j >= 0:
                d2[j, :] += dZ[zs[k]]
                d2[:, j] += dZ[zs[k]]
        for k in ei:
            j = epar[k]
            if j >= 0:
                d2[j, :] += de[es[k]]
                d2[:, j] += de[es[k]]
        d2Z[t] = d2
        e2 = -(1.0 - 0.5 * g) * v * sg * (1.0 - 2.0 * p) + g * p * q * et - 0.5 * g * (1.0 - 2.0 * p) * e1
        outer = np.outer(dW, dW)
        d2e[t] = e2 * outer + e1 * d2
        hess += eI * d2 - v * outer
    return ll, grad, hess, Z, W, pi, s2, e, dZ, -1, OK


# ---------------------------------------------------------------------------
# score statistic profile over nuisance values


@njit
def _chol_quadform(S, I):
    # S^T I^{-1} S by Cholesky; returns nan when I is not positive definite
    L = S.size
    C = np.zeros((L, L))
    for i in range(L):
        for j in range(i + 1):
            acc = I[i, j]
            for k in range(j):
                acc -= C[i, k] * C[j, k]
            if i == j:
                if acc <= 0.0:
                    return np.nan
                C[i, i] = math.sqrt(acc)
            else:
                C[i, j] = acc / C[j, j]
    z = np.zeros(L)
    out = 0.0
    for i in range(L):
        acc = S[i]
        for k in range(i):
            acc -= C[i, k] * z[k]
        z[i] = acc / C[i, i]
        out += z[i] * z[i]
    return out


@njit
def score_profile_nb(eI, e, s2, v, ulags, olags, omegas):
    n = eI.size
    L = ulags.size
    K = olags.size
    G = omegas.shape[0]
    Q = np.empty(G)
    S = np.zeros((G, L))
    Info = np.zeros((G, L, L))
    f = np.zeros(n)
    u = np.zeros(n)
    tau = np.zeros(n)
    h = np.zeros(n)
    rn = 1.0 / math.sqrt(n)
    for g in range(G):
        # lagged residuals filtered through (1 - sum omega B^j)^{-1}
        for s in range(n):
            acc = e[s]
            for k in range(K):
                sk = s - olags[k]
                if sk >= 0:
                    acc += omegas[g, k] * f[sk]
            f[s] = acc
        for l in range(L):
            acc = 0.0
            for t in range(ulags[l], n):
                acc += eI[t] * f[t - ulags[l]]
            S[g, l] = acc * rn
        if K == 1:
            j0 = olags[0]
            w = omegas[g, 0]
            for s in range(n):
                acc = v[s]
                if s - j0 >= 0:
                    acc += w * w * u[s - j0]
                u[s] = acc
            for l in range(L):
                for k in range(l, L):
                    d = ulags[k] - ulags[l]
                    if d % j0 != 0:
                        continue
                    c = w ** (d // j0)
                    acc = 0.0
                    for t in range(ulags[k], n):
                        acc += s2[t] * u[t - ulags[k]]
                    Info[g, l, k] = c * acc / n
                    Info[g, k, l] = Info[g, l, k]
        else:
            for s in range(n):
                acc = 1.0 if s == 0 else 0.0
                for k in range(K):
                    sk = s - olags[k]
                    if sk >= 0:
                        acc += omegas[g, k] * tau[sk]
                tau[s] = acc
            for l in range(L):
                for k in range(l, L):
                    d = ulags[k] - ulags[l]
                    for s in range(n):
                        acc = 0.0
                        for b in range(s + 1):
                            if b + d < n:
                                acc += tau[b] * tau[b + d] * v[s - b]
                        h[s] = acc
                    acc = 0.0
                    for t in range(ulags[k], n):
                        acc += s2[t] * h[t - ulags[k]]
                    Info[g, l, k] = acc / n
                    Info[g, k, l] = Info[g, l, k]
        Q[g] = _chol_quadform(S[g], Info[g])
    return Q, S, Info


def _ar_filter(x, lags, coefs, n):
    a = np.zeros(max(lags, default=0) + 1)
    a[0] = 1.0
    for j, c in zip(lags, coefs):
        a[j] -= c
    return lfilter([1.0], a, x)[:n]


def score_profile_np(eI, e, s2, v, ulags, olags, omegas):
    n = eI.size
    L = ulags.size
    K = olags.size
    G = omegas.shape[0]
    Q = np.empty(G)
    S = np.zeros((G, L))
    Info = np.zeros((G, L, L))
    rn = 1.0 / math.sqrt(n)
    ulags = [int(j) for j in ulags]
    olags = [int(j) for j in olags]
    for g in range(G):
        om = omegas[g]
        f = _ar_filter(e, olags, om, n) if K else e
        for l, j in enumerate(ulags):
            S[g, l] = np.dot(eI[j:], f[: n - j]) * rn
        if K == 1:
            j0, w = olags[0], om[0]
            u = _ar_filter(v, [j0], [w * w], n)
        else:
            impulse = np.zeros(n)
            impulse[0] = 1.0
            tau = _ar_filter(impulse, olags, om, n) if K else impulse
        for l in range(L):
            for k in range(l, L):
                d = ulags[k] - ulags[l]
                if K == 1:
                    if d % j0:
                        continue
                    h = w ** (d // j0) * u
                else:
                    wts = tau[: n - d] * tau[d:]
                    h = np.convolve(wts, v)[:n]
                jk = ulags[k]
                Info[g, l, k] = Info[g, k, l] = np.dot(s2[jk:], h[: n - jk]) / n
        try:
            c = np.linalg.cholesky(Info[g])
            z = np.linalg.solve(c, S[g])
            Q[g] = float(z @ z)
        except np.linalg.LinAlgError:
            Q[g] = np.nan
    return Q, S, Info


# ---------------------------------------------------------------------------
# forward simulation from uniforms


@njit
def glarma_simulate_nb(U, m, xb, zlags, zcoef, elags, ecoef, gamma):
    n = xb.size
    y = np.zeros(n, dtype=np.int64)
    Z = np.zeros(n)
    e = np.zeros(n)
    g = float(gamma)
    for t in range(n):
        z = 0.0
        for k in range(zlags.size):
            s = t - zlags[k]
            if s >= 0:
                z += zcoef[k] * Z[s]
        for k in range(elags.size):
            s = t - elags[k]
            if s >= 0:
                z += ecoef[k] * e[s]
        Z[t] = z
        p, q = _expit_pair(xb[t] + z)
        c = 0
        for i in range(m[t]):
            if U[t, i] < p:
                c += 1
        y[t] = c
        e[t] = (c * q - (m[t] - c) * p) * _scale(m[t] * p * q, g)
    return y


def glarma_simulate_np(U, m, xb, zlags, zcoef, elags, ecoef, gamma):
    n = xb.size
    y = np.zeros(n, dtype=np.int64)
    Z = np.zeros(n)
    e = np.zeros(n)
    g = float(gamma)
    zlags, elags = np.asarray(zlags), np.asarray(elags)
    for t in range(n):
        zs, es = t - zlags, t - elags
        zok, eok = zs >= 0, es >= 0
        z = np.dot(zcoef[zok], Z[zs[zok]]) + np.dot(ecoef[eok], e[es[eok]])
        Z[t] = z
        p, q = _expit_pair_py(xb[t] + z)
        c = int(np.count_nonzero(U[t, : m[t]] < p))
        y[t] = c
        e[t] = (c * q - (m[t] - c) * p) * _scale_py(m[t] * p * q, g)
    return y


def bernoulli_counts(U: np.ndarray, m: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Binomial draws as counts of ``U[t, :m_t] < pi_t`` (matches the simulators)."""
    cols = np.arange(U.shape[1])
    hit = (U < pi[:, None]) & (cols[None, :] < m[:, None])
    return hit.sum(axis=1).astype(np.int64)


if USE_NUMBA:
    glarma_filter = glarma_filter_nb
    score_profile = score_profile_nb
    glarma_simulate = glarma_simulate_nb
else:
    glarma_filter = glarma_filter_np
    score_profile = score_profile_np
    glarma_simulate = glarma_simulate_np
