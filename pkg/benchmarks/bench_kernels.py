"""Compiled (numba) versus vectorised (numpy) kernels.

Times each hot loop on inputs sized like one replicate of the simulation
studies, after a warm-up call so compilation is excluded. Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 200]

With numba absent the ``_nb`` kernels are plain Python and the comparison
shows the interpreter cost instead.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from binseq import ModelSpec, NuisanceGrid, fit_glm
from binseq import kernels as K
from binseq._accel import HAVE_NUMBA
from binseq.glarma import recursion_arrays
from binseq.montecarlo import SimDesign, simulate_null
from binseq.rng import uniforms
from binseq.score_glarma import null_pieces, nuisance_points


def cases(n: int):
    design = SimDesign.trend(n, 2, (-0.5, 1.0))
    series = simulate_null(design, 0)
    glm = fit_glm(series)
    spec = ModelSpec.glarma((1,), (1, 2), "pearson")
    arrs = recursion_arrays(spec, [0.2, -0.1], [0.5], series.r)
    beta = glm.beta_hat
    for order in (0, 1, 2):
        args = (series.y, series.m, series.X, beta, *arrs, spec.gamma, series.r + spec.L, order)
        yield f"glarma_filter order={order}", K.glarma_filter_nb, K.glarma_filter_np, args
    eI, e, s2, v = null_pieces(series, glm, 1)
    s11 = ModelSpec.glarma((1,), (1,), "pearson")
    for step in (0.1, 0.01):
        om = np.ascontiguousarray(nuisance_points(s11, NuisanceGrid(-0.99, 0.99, step)))
        args = (eI, e, s2, v, np.array([1]), np.array([1]), om)
        yield f"score_profile {om.shape[0]} omegas", K.score_profile_nb, K.score_profile_np, args
    zl, zc, _, el, ec, _ = arrs
    U = uniforms(1, 0, series.n, 2)
    args = (U, series.m, series.X @ beta, zl, zc, el, ec, 1)
    yield "glarma_simulate", K.glarma_simulate_nb, K.glarma_simulate_np, args


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats; the minimum is reported")
    ap.add_argument("--n", type=int, default=200, help="series length (default: 200)")
    args = ap.parse_args()
    print(f"numba available: {HAVE_NUMBA}; n = {args.n}")
    print(f"{'kernel':<28}{'numba (ms)':>12}{'numpy (ms)':>12}{'speed-up':>10}{'max |diff|':>12}")
    for name, fnb, fnp, a in cases(args.n):
        rnb, rnp = fnb(*a), fnp(*a)  # warm-up and agreement
        outs_nb = rnb if isinstance(rnb, tuple) else (rnb,)
        outs_np = rnp if isinstance(rnp, tuple) else (rnp,)
        diff = max(float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float)), initial=0.0))
                   for x, y in zip(outs_nb, outs_np))
        times = []
        for f in (fnb, fnp):
            number = max(1, int(0.2 / max(min(timeit.repeat(lambda: f(*a), number=1, repeat=2)), 1e-7)))
            t = min(timeit.repeat(lambda: f(*a), number=number, repeat=args.repeat)) / number
            times.append(t * 1e3)
        print(f"{name:<28}{times[0]:>12.4f}{times[1]:>12.4f}{times[1] / times[0]:>9.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()
