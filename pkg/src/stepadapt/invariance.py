"""Paired-run verification of algorithm invariances.

Each check runs the same algorithm twice on one recorded sample stream:
once on the plain objective, once on a transformed problem with a
correspondingly transformed initial state, and compares the state
sequences.

* monotone   -- f vs g(f) for strictly increasing g: sequences must be
                bit-identical (the ranking sees identical comparisons).
* translation -- f vs x -> f(x - offset), started from x0 + offset:
                x sequences differ by the offset, sigma is unchanged.
* scale      -- f vs x -> f(alpha x), started from (x0/alpha,
                sigma0/alpha): states scale by 1/alpha, exactly so when
                alpha is a power of two.

A ranking flip caused by rounding (two candidates with nearly equal
values) fails the check rather than being forgiven; rerunning with a
different seed is the documented remedy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import AlgorithmSpec, AlgorithmState, RngStream, step
from .objectives import Objective, composite


@dataclass(frozen=True, eq=False)
class PairedRunReport:
    check: str
    max_x_deviation: float
    max_sigma_deviation: float
    horizon: int
    verdict: str  # "pass" or "fail"
    fail_t: Optional[int] = None
    fail_state_a: Optional[AlgorithmState] = None
    fail_state_b: Optional[AlgorithmState] = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def __str__(self):
        tail = "" if self.passed else f" at t={self.fail_t}"
        return (
            f"{self.check}: {self.verdict}{tail} "
            f"(max dx={self.max_x_deviation:.3e}, "
            f"dsigma={self.max_sigma_deviation:.3e}, horizon={self.horizon})"
        )


def _as_rng(seed) -> RngStream:
    return seed if isinstance(seed, RngStream) else RngStream(int(seed))


def _record_blocks(spec: AlgorithmSpec, horizon: int, seed):
    rng = _as_rng(seed)
    return [spec.sampler(rng) for _ in range(int(horizon))]


def _run(spec: AlgorithmSpec, f, state0: AlgorithmState, blocks):
    states = [state0]
    s = state0
    for u in blocks:
        s = step(s, u, spec, f)
        states.append(s)
    return states


def _compare(check: str, states_a, states_b, expect_x: Callable, expect_sigma: Callable,
             tolerance: float, horizon: int) -> PairedRunReport:
    max_dx = 0.0
    max_ds = 0.0
    for t, (a, b) in enumerate(zip(states_a, states_b)):
        ex = expect_x(a)
        es = expect_sigma(a)
        scale = np.linalg.norm(ex)
        dx = np.linalg.norm(b.x - ex) / (scale if scale > 0 else 1.0)
        ds = abs(b.sigma - es) / es
        max_dx = max(max_dx, dx)
        max_ds = max(max_ds, ds)
        if dx > tolerance or ds > tolerance:
            return PairedRunReport(
                check, max_dx, max_ds, horizon, "fail",
                fail_t=t, fail_state_a=a, fail_state_b=b,
            )
    return PairedRunReport(check, max_dx, max_ds, horizon, "pass")


def check_monotone_invariance(spec: AlgorithmSpec, objective: Objective, g: Callable,
                              state0: AlgorithmState, horizon: int, seed,
                              g_label: str = "g") -> PairedRunReport:
    """Replay on f and on g(f); the state sequences must be identical
    (exact equality, never tolerance-based: only comparisons differ)."""
    blocks = _record_blocks(spec, horizon, seed)
    transformed = composite(g, objective, g_label=g_label)
    states_a = _run(spec, objective, state0, blocks)
    states_b = _run(spec, transformed, state0, blocks)
    check = f"monotone[{g_label}] {spec.name} on {objective.label}"
    return _compare(
        check, states_a, states_b,
        expect_x=lambda a: a.x, expect_sigma=lambda a: a.sigma,
        tolerance=0.0, horizon=horizon,
    )


def check_translation_invariance(spec: AlgorithmSpec, objective: Objective, offset,
                                 state0: AlgorithmState, horizon: int, seed,
                                 tolerance: float = 1e-9) -> PairedRunReport:
    """Replay on f from x0 and on x -> f(x - offset) from x0 + offset.

    Floating-point addition breaks the exact identity, hence the
    relative tolerance (1e-9 default, looser for very large offsets).
    """
    offset = np.asarray(offset, dtype=float)
    blocks = _record_blocks(spec, horizon, seed)
    states_a = _run(spec, objective, state0, blocks)
    shifted_state = AlgorithmState(state0.x + offset, state0.sigma)
    states_b = _run(spec, objective.shifted(offset), shifted_state, blocks)
    check = f"translation {spec.name} on {objective.label}"
    return _compare(
        check, states_a, states_b,
        expect_x=lambda a: a.x + offset, expect_sigma=lambda a: a.sigma,
        tolerance=tolerance, horizon=horizon,
    )


def check_scale_invariance(spec: AlgorithmSpec, objective: Objective, alpha: float,
                           state0: AlgorithmState, horizon: int, seed,
                           tolerance: Optional[float] = None) -> PairedRunReport:
    """Replay on f from (x0, sigma0) and on x -> f(alpha x) from
    (x0/alpha, sigma0/alpha).

    When alpha is a power of two every operation scales exactly and the
    default tolerance is zero (bit identity); otherwise 1e-9 relative.
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if tolerance is None:
        tolerance = 0.0 if math.frexp(alpha)[0] == 0.5 else 1e-9
    blocks = _record_blocks(spec, horizon, seed)
    states_a = _run(spec, objective, state0, blocks)
    scaled_state = AlgorithmState(state0.x / alpha, state0.sigma / alpha)
    states_b = _run(spec, objective.rescaled_argument(alpha), scaled_state, blocks)
    check = f"scale[{alpha:g}] {spec.name} on {objective.label}"
    return _compare(
        check, states_a, states_b,
        expect_x=lambda a: a.x / alpha, expect_sigma=lambda a: a.sigma / alpha,
        tolerance=tolerance, horizon=horizon,
    )
