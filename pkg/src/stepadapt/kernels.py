"""Compiled fast path for the constant step-size baseline on the sphere.

The non-adaptive baseline needs tens of millions of accept/reject steps
to reach interesting targets, far beyond what the generic Python
pipeline can do in reasonable time.  This kernel simulates exactly the
same process (propose x + sigma*u, accept on strict improvement of the
squared norm) in compiled code.  It is used only when the objective is
the plain sphere centered at the origin; every other configuration runs
through the generic pipeline.
"""

from __future__ import annotations

import numpy as np


def _compiled_loop():
    from numba import njit

    @njit(cache=True)
    def loop(x, sigma, target_f, max_evals, seed, stride, out_t, out_f):
        np.random.seed(seed)
        n = x.shape[0]
        f = np.dot(x, x)
        rows = 0
        out_t[rows] = 0
        out_f[rows] = f
        rows += 1
        evals = 0
        reached = -1
        while evals < max_evals and not f <= target_f:
            u = np.random.standard_normal(n)
            d = 0.0
            nsq = 0.0
            for i in range(n):
                d += x[i] * u[i]
                nsq += u[i] * u[i]
            candidate_f = f + 2.0 * sigma * d + sigma * sigma * nsq
            evals += 1
            if candidate_f < f:
                for i in range(n):
                    x[i] = x[i] + sigma * u[i]
                f = np.dot(x, x)
            if evals % stride == 0:
                out_t[rows] = evals
                out_f[rows] = f
                rows += 1
        if reached == -1 and f <= target_f:
            reached = evals
        if out_t[rows - 1] != evals:
            out_t[rows] = evals
            out_f[rows] = f
            rows += 1
        return rows, evals, f, reached

    return loop


_LOOP = None


def constant_sigma_sphere_run(x0, sigma: float, max_evals: int, target_f: float,
                              seed: int, stride: int = 1):
    """Run the constant-sigma (1+1) acceptance rule on the sphere.

    Returns (t_rows, f_rows, evals, final_f, evals_to_target) where the
    row arrays sample the trajectory every ``stride`` evaluations (the
    final state is always included) and evals_to_target is -1 when the
    target was not reached.
    """
    global _LOOP
    if _LOOP is None:
        _LOOP = _compiled_loop()
    x = np.array(x0, dtype=float)
    stride = max(1, int(stride))
    capacity = int(max_evals) // stride + 3
    out_t = np.empty(capacity, dtype=np.int64)
    out_f = np.empty(capacity, dtype=np.float64)
    target = -np.inf if target_f is None else float(target_f)
    rows, evals, final_f, reached = _LOOP(
        x, float(sigma), target, int(max_evals), int(seed) & 0xFFFFFFFF,
        stride, out_t, out_f,
    )
    return out_t[:rows].copy(), out_f[:rows].copy(), int(evals), float(final_f), int(reached)
