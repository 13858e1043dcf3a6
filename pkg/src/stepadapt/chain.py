"""The normalized process z = x / sigma and convergence-rate estimation.

For a translation- and scale-invariant algorithm on an objective that is
scaling-invariant about the origin, z evolves as a time-homogeneous
Markov chain on its own: candidates are built from (z, 1), and the next
state is the mean update at step-size one divided by the step-size
multiplier eta = g2(1, y).  The per-step log multipliers ln(eta)
telescope into ln(sigma_t / sigma_0), and their ergodic average
estimates the linear convergence rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    AlgorithmSpec,
    AlgorithmState,
    InternalInvariantError,
    RngStream,
    SampleBlock,
    apply_permutation,
    evaluate_candidates,
)
from .objectives import Objective


class InsufficientDataError(ValueError):
    """Too few post-burn-in samples for a confidence interval."""


class DegenerateStateError(ValueError):
    """A norm that must stay positive hit zero (or overflowed)."""


@dataclass(frozen=True, eq=False)
class StepOutcome:
    """One normalized transition: next state, ln of the step-size
    multiplier, and the rank-ordered sample block that produced both."""

    z_next: np.ndarray
    log_eta: float
    ranked_block: SampleBlock


@dataclass(frozen=True)
class CREstimate:
    """Estimated convergence rate (positive means convergence) with a
    95% half-width from batch means."""

    cr: float
    half_width: float
    samples: int
    burn_in: int

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")
        if not self.samples > self.burn_in:
            raise ValueError("need samples > burn_in")


@dataclass(frozen=True)
class TrajectoryRecord:
    """One trace row; the field order here is the file column order."""

    t: int
    evals: int
    x_norm: float
    sigma: float
    z_norm: float
    log_eta: float


TRACE_COLUMNS = ("t", "evals", "x_norm", "sigma", "z_norm", "log_eta")


def normalized_step(z: np.ndarray, u: SampleBlock, spec: AlgorithmSpec, f) -> StepOutcome:
    """One transition of the normalized chain.

    ``f`` must be scaling-invariant about the origin (the caller's
    responsibility; see ``run_chain(check_objective=True)``).
    """
    state = AlgorithmState(np.asarray(z, dtype=float), 1.0)
    candidates = spec.sol(state, u.coords)
    values = evaluate_candidates(f, candidates)
    s = spec.ord_fn(values)
    y = apply_permutation(s, u)
    x1 = spec.g1(state, y)
    eta = float(spec.g2(1.0, y))
    if not eta > 0:
        raise InternalInvariantError(f"step-size multiplier {eta!r} (must be > 0)")
    return StepOutcome(z_next=x1 / eta, log_eta=math.log(eta), ranked_block=y)


def run_chain(z0, spec: AlgorithmSpec, f, steps: int, rng: RngStream,
              check_objective: bool = False) -> list:
    """Iterate the normalized chain with fresh sample blocks.

    With ``check_objective=True`` a quick randomized scaling-invariance
    check of ``f`` runs first and a refutation raises ValueError.
    """
    z = np.asarray(z0, dtype=float)
    if not np.linalg.norm(z) > 0:
        raise ValueError("z0 must be nonzero")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if check_objective:
        from .objectives import check_scaling_invariance

        if isinstance(f, Objective):
            report = check_scaling_invariance(f.centered, trials=64,
                                              rng=rng.spawn(0xC11EC4))
            if not report.consistent:
                raise ValueError(
                    f"objective {f.label!r} is not scaling-invariant about its "
                    f"reference (witness rho={report.witness.rho:g})"
                )
    outcomes = []
    for _ in range(int(steps)):
        out = normalized_step(z, spec.sampler(rng), spec, f)
        outcomes.append(out)
        z = out.z_next
    return outcomes


@dataclass(frozen=True, eq=False)
class CoupledTrace:
    """Synchronized traces of the full algorithm and the normalized
    transition driven by one shared sample stream.

    Norms of the full state are kept in log space (the state itself is
    renormalized by powers of two internally, so multi-thousand-e-fold
    runs neither overflow nor underflow).  ``z_norm`` is |x_t / sigma_t|
    and ``log_eta`` is ln(g2(1, y_t)) from the full run's ranked block,
    bit-consistent with the sigma update.

    ``step_defect[t]`` is the relative gap between the two routes to
    the next normalized state: the independent ``normalized_step`` at
    x_t / sigma_t versus the ratio x_{t+1} / sigma_{t+1} from the full
    pipeline.  In exact arithmetic both are equal at every step.  (A
    whole-sequence float comparison is not meaningful here: under a
    common sample stream, per-step rounding is amplified by 1/eta each
    subsequent step, i.e. exponentially at the convergence rate, so any
    two float implementations of the sequence drift apart regardless of
    care.  The per-step defect is the quantity rounding theory bounds.)
    """

    ln_x_norm: np.ndarray    # (steps + 1,)
    ln_sigma: np.ndarray     # (steps + 1,)
    z_norm: np.ndarray       # (steps + 1,)
    log_eta: np.ndarray      # (steps,)
    step_defect: np.ndarray  # (steps,)

    @property
    def steps(self) -> int:
        return self.log_eta.shape[0]


# renormalization bounds for the full state, far from either float limit
_LN2 = math.log(2.0)
_RENORM_HI = 2.0 ** 200
_RENORM_LO = 2.0 ** -200


def run_coupled(spec: AlgorithmSpec, objective: Objective, state0: AlgorithmState,
                steps: int, rng: RngStream) -> CoupledTrace:
    """Run the full algorithm and, at every visited state, the
    normalized transition on the same sample block, recording the
    per-step agreement between the two routes.

    The full state is evolved in coordinates centered at the objective's
    reference, so the normalized side sees the same scaling-invariant
    geometry about the origin.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    base = objective.base
    x = np.asarray(state0.x, dtype=float) - objective.x_star
    sigma = float(state0.sigma)
    if not np.linalg.norm(x) > 0:
        raise DegenerateStateError("x0 must differ from the reference point")
    exponent = 0  # true state is (x, sigma) * 2**exponent

    ln_x = np.empty(steps + 1)
    ln_s = np.empty(steps + 1)
    z_norm = np.empty(steps + 1)
    log_eta = np.empty(steps)
    defect = np.empty(steps)

    def record(t):
        shift = exponent * _LN2
        ln_x[t] = math.log(np.linalg.norm(x)) + shift
        ln_s[t] = math.log(sigma) + shift
        z_norm[t] = np.linalg.norm(x / sigma)

    record(0)
    for t in range(int(steps)):
        u = spec.sampler(rng)
        z = x / sigma

        state = AlgorithmState(x, sigma)
        candidates = spec.sol(state, u.coords)
        values = evaluate_candidates(base, candidates)
        y = apply_permutation(spec.ord_fn(values), u)
        x = spec.g1(state, y)
        sigma = float(spec.g2(sigma, y))
        log_eta[t] = math.log(spec.g2(1.0, y))

        out = normalized_step(z, u, spec, base)
        ratio = x / sigma
        defect[t] = np.linalg.norm(out.z_next - ratio) / np.linalg.norm(ratio)

        if sigma > _RENORM_HI or sigma < _RENORM_LO:
            # exact rescale by a power of two; the future trajectory is
            # bit-identical up to the tracked exponent
            k = math.frexp(sigma)[1]
            x = np.ldexp(x, -k)
            sigma = math.ldexp(sigma, -k)
            exponent += k
        record(t + 1)

    return CoupledTrace(ln_x, ln_s, z_norm, log_eta, defect)


def log_progress_check(trace: CoupledTrace) -> float:
    """Max deviation in the per-step identity

        ln(|x_{t+1}| / |x_t|) = ln(|z_{t+1}| / |z_t|) + ln(eta_t).

    Exact in real arithmetic; only float noise should remain.
    """
    if not np.isfinite(trace.ln_x_norm).all():
        raise DegenerateStateError("x norm hit zero or overflowed")
    if not (trace.z_norm > 0).all():
        raise DegenerateStateError("z norm hit zero")
    ln_z = np.log(trace.z_norm)
    lhs = np.diff(trace.ln_x_norm)
    rhs = np.diff(ln_z) + trace.log_eta
    return float(np.abs(lhs - rhs).max())


def sigma_telescoping_gap(trace: CoupledTrace) -> float:
    """| mean(log_eta) - (ln sigma_T - ln sigma_0) / T |: the per-step
    multipliers must telescope into the total step-size change."""
    t = trace.steps
    return float(
        abs(trace.log_eta.mean() - (trace.ln_sigma[-1] - trace.ln_sigma[0]) / t)
    )


def default_burn_in(samples: int) -> int:
    """First 20% of the samples, capped at 10**4."""
    return min(samples // 5, 10_000)


def _log_etas(outcomes) -> np.ndarray:
    if isinstance(outcomes, np.ndarray):
        return np.asarray(outcomes, dtype=float)
    if isinstance(outcomes, CoupledTrace):
        return outcomes.log_eta
    return np.array([o.log_eta for o in outcomes], dtype=float)


def estimate_cr(outcomes, burn_in: Optional[int] = None) -> CREstimate:
    """Convergence rate as minus the post-burn-in mean of ln(eta), with
    a 95% half-width from batch means (ceil(sqrt(N)) batches, robust to
    the chain's autocorrelation).

    ``outcomes`` may be a list of StepOutcome, a CoupledTrace, or a
    plain array of per-step ln(eta) values.
    """
    values = _log_etas(outcomes)
    total = values.shape[0]
    if burn_in is None:
        burn_in = default_burn_in(total)
    if not 0 <= burn_in < total:
        raise ValueError("need 0 <= burn_in < number of samples")
    tail = values[burn_in:]
    n = tail.shape[0]
    n_batches = math.isqrt(n)
    if n_batches * n_batches < n:
        n_batches += 1
    batch = n // n_batches
    if n_batches < 10 or batch < 1:
        raise InsufficientDataError(
            f"only {n_batches} post-burn-in batches; need at least 10"
        )
    used = tail[n - n_batches * batch:]
    means = used.reshape(n_batches, batch).mean(axis=1)
    stderr = float(means.std(ddof=1)) / math.sqrt(n_batches)
    return CREstimate(
        cr=-float(tail.mean()),
        half_width=1.96 * stderr,
        samples=int(total),
        burn_in=int(burn_in),
    )


def estimate_r_of_z(z, spec: AlgorithmSpec, f, mc_samples: int, rng: RngStream):
    """Monte-Carlo estimate of E[ln eta] at a fixed normalized state z.

    Returns (mean, standard error) over ``mc_samples`` fresh draws.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    z = np.asarray(z, dtype=float)
    draws = np.empty(int(mc_samples))
    for i in range(int(mc_samples)):
        draws[i] = normalized_step(z, spec.sampler(rng), spec, f).log_eta
    mean = float(draws.mean())
    stderr = float(draws.std(ddof=1)) / math.sqrt(len(draws)) if len(draws) > 1 else 0.0
    return mean, stderr
