"""Concrete step-size adaptive algorithms.

Four algorithms are provided, all fitting the generic quadruplet of
``core.AlgorithmSpec``:

* ``csa``        -- non-elitist ES, path-length step-size control
                    (no cumulation): compares the length of the
                    recombined step to its expectation under random
                    selection.
* ``xnes``       -- non-elitist ES, exponential natural-gradient
                    step-size update driven by squared lengths.
* ``sa``         -- (1,p) self-adaptation: each candidate carries its
                    own log-normal step-size mutation; selection adapts
                    sigma for free.
* ``oneplusone`` -- (1+1) elitist rule with generalized 1/5 success
                    rule: multiply sigma by gamma on success, by
                    gamma**(-1/q) on failure.

``constant`` is the (1+1) acceptance rule with a fixed step-size, the
non-adaptive baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AlgorithmSpec, AlgorithmState, RankingPermutation, SampleBlock, rank_values

ALGORITHM_NAMES = ("csa", "xnes", "sa", "oneplusone", "constant")

_WEIGHT_TOL = 1e-12


def default_population(n: int) -> int:
    """Population size 4 + floor(3 ln n) used by the comma variants."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 4 + int(math.floor(3.0 * math.log(n)))


def chi_mean(n: int) -> float:
    """Expected norm of a standard normal vector in dimension n.

    Exactly sqrt(2) * Gamma((n+1)/2) / Gamma(n/2), computed via
    log-gamma for stability at large n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.exp(
        0.5 * math.log(2.0) + math.lgamma((n + 1) / 2.0) - math.lgamma(n / 2.0)
    )


def default_weights(p: int) -> np.ndarray:
    """Recombination weights: log-rank weights on the better half.

    Raw weights ln(p/2 + 1/2) - ln(i) for ranks i = 1..floor(p/2), zero
    for the rest, normalized so that sum(|w|) = 1.  Non-increasing by
    construction.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    mu = p // 2
    raw = np.zeros(p)
    ranks = np.arange(1, mu + 1, dtype=float)
    raw[:mu] = np.log(p / 2.0 + 0.5) - np.log(ranks)
    return raw / np.abs(raw).sum()


@dataclass(frozen=True, eq=False)
class CommaEsParams:
    """Parameters shared by the csa and xnes variants.

    ``mu_w`` is the variance-effective selection mass 1 / sum(w_i^2);
    ``chi_mean`` is E[||N(0, I_n)||] for the run's dimension n.
    """

    kappa_m: float
    kappa_sigma: float
    weights: np.ndarray
    mu_w: float
    chi_mean: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if self.kappa_m <= 0 or self.kappa_sigma <= 0:
            raise ValueError("learning rates must be positive")
        if np.any(np.diff(w) > 0):
            raise ValueError("weights must be non-increasing")
        if abs(np.abs(w).sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must satisfy sum(|w_i|) = 1")
        if abs(self.mu_w * np.square(w).sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("mu_w inconsistent with weights")
        if not self.chi_mean > 0:
            raise ValueError("chi_mean must be positive")


@dataclass(frozen=True)
class SaParams:
    """(1,p) self-adaptation parameters: log-normal mutation strength
    tau (about 1/sqrt(n)) and candidates per iteration p."""

    tau: float
    p: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.p < 2:
            raise ValueError("p must be >= 2")


@dataclass(frozen=True)
class OnePlusOneParams:
    """Generalized 1/5 rule: success multiplier gamma = exp(kappa_sigma)
    and failure exponent q = (1 - p_target) / p_target."""

    gamma: float
    q: float

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError("gamma must be > 1")
        if not self.q > 0:
            raise ValueError("q must be positive")

    @property
    def success_multiplier(self) -> float:
        return self.gamma

    @property
    def failure_multiplier(self) -> float:
        return self.gamma ** (-1.0 / self.q)


def sol_es(state: AlgorithmState, u):
    """Candidate x + sigma * u.  Accepts one coordinate (m,) or a batch
    (k, m)."""
    return state.x + state.sigma * np.asarray(u)


def sol_sa(state: AlgorithmState, u, tau: float):
    """Self-adaptation candidate: the last coordinate of u mutates the
    step-size log-normally, the first n coordinates are the direction.

    x + sigma * exp(tau * u[n]) * u[0:n], batched over leading axes.
    """
    u = np.asarray(u)
    scale = np.exp(tau * u[..., -1])
    return state.x + state.sigma * scale[..., None] * u[..., :-1]


def _weighted_step(y: SampleBlock, weights) -> np.ndarray:
    return weights @ y.coords


def comma_mean_update(state: AlgorithmState, y: SampleBlock, params: CommaEsParams):
    """x + kappa_m * sigma * sum_i w_i y^i (shared by csa and xnes)."""
    return state.x + params.kappa_m * state.sigma * _weighted_step(y, params.weights)


def csa_sigma_update(sigma: float, y: SampleBlock, params: CommaEsParams) -> float:
    """sigma * exp(kappa_sigma * (sqrt(mu_w) ||sum w_i y^i|| / chi_mean - 1))."""
    length = np.linalg.norm(_weighted_step(y, params.weights))
    return sigma * math.exp(
        params.kappa_sigma * (math.sqrt(params.mu_w) * length / params.chi_mean - 1.0)
    )


def xnes_sigma_update(sigma: float, y: SampleBlock, params: CommaEsParams) -> float:
    """sigma * exp(kappa_sigma / (2n) * sum_i w_i (||y^i||^2 - n))."""
    n = y.m
    sq = np.einsum("ij,ij->i", y.coords, y.coords)
    return sigma * math.exp(
        params.kappa_sigma / (2.0 * n) * float(params.weights @ (sq - n))
    )


def g_comma_csa(state: AlgorithmState, y: SampleBlock, params: CommaEsParams) -> AlgorithmState:
    return AlgorithmState(
        comma_mean_update(state, y, params), csa_sigma_update(state.sigma, y, params)
    )


def g_comma_xnes(state: AlgorithmState, y: SampleBlock, params: CommaEsParams) -> AlgorithmState:
    return AlgorithmState(
        comma_mean_update(state, y, params), xnes_sigma_update(state.sigma, y, params)
    )


def sa_sigma_update(sigma: float, y: SampleBlock, params: SaParams) -> float:
    """sigma * exp(tau * [y^1]_{n+1}): the selected candidate's own
    step-size mutation becomes the next step-size."""
    return sigma * math.exp(params.tau * y.coords[0, -1])


def g_sa(state: AlgorithmState, y: SampleBlock, params: SaParams) -> AlgorithmState:
    best = y.coords[0]
    scale = math.exp(params.tau * best[-1])
    return AlgorithmState(
        state.x + state.sigma * scale * best[:-1], state.sigma * scale
    )


def oneplusone_sigma_update(sigma: float, y: SampleBlock, params: OnePlusOneParams) -> float:
    """gamma on success (selected step nonzero), gamma**(-1/q) on failure."""
    success = bool(np.any(y.coords[0]))
    return sigma * (params.gamma if success else params.failure_multiplier)


def g_oneplusone(state: AlgorithmState, y: SampleBlock, params: OnePlusOneParams) -> AlgorithmState:
    return AlgorithmState(
        state.x + state.sigma * y.coords[0],
        oneplusone_sigma_update(state.sigma, y, params),
    )


_IDENTITY2 = RankingPermutation((0, 1))
_SWAP2 = RankingPermutation((1, 0))


def rank_improvement_first(values) -> RankingPermutation:
    """Ranking for the (candidate, incumbent) pair of plus selection.

    The candidate leads only on strict improvement; a tie goes to the
    incumbent (rejection).  This intentionally differs from the stable
    tie rule of ``rank_values``; the difference has measure zero under
    continuous sampling.
    """
    vals = np.asarray(values, dtype=float)
    if vals.shape != (2,):
        raise ValueError("plus selection ranks exactly two values")
    if not np.isfinite(vals).all():
        raise ValueError("cannot rank non-finite values")
    return _IDENTITY2 if vals[0] < vals[1] else _SWAP2


def _comma_sampler(p: int, n: int):
    def sampler(rng) -> SampleBlock:
        return SampleBlock(rng.standard_normal((p, n)))

    return sampler


def _sa_sampler(p: int, n: int):
    def sampler(rng) -> SampleBlock:
        return SampleBlock(rng.standard_normal((p, n + 1)))

    return sampler


def _plus_sampler(n: int):
    # coordinate 2 is the zero vector standing for "keep the incumbent"
    def sampler(rng) -> SampleBlock:
        coords = np.zeros((2, n))
        coords[0] = rng.standard_normal(n)
        return SampleBlock(coords)

    return sampler


def _comma_params(n, p, kappa_m, kappa_sigma, weights) -> CommaEsParams:
    if p is None:
        p = default_population(n)
    w = default_weights(p) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (p,):
        raise ValueError(f"need {p} weights, got {w.shape}")
    return CommaEsParams(
        kappa_m=float(kappa_m),
        kappa_sigma=float(kappa_sigma),
        weights=w,
        mu_w=1.0 / float(np.square(w).sum()),
        chi_mean=chi_mean(n),
    )


def make_csa(n: int, p: int = None, kappa_m: float = 1.0, kappa_sigma: float = 1.0,
             weights=None) -> AlgorithmSpec:
    params = _comma_params(n, p, kappa_m, kappa_sigma, weights)
    return AlgorithmSpec(
        name="csa",
        p=len(params.weights),
        m=n,
        sol=sol_es,
        g1=lambda state, y: comma_mean_update(state, y, params),
        g2=lambda sigma, y: csa_sigma_update(sigma, y, params),
        sampler=_comma_sampler(len(params.weights), n),
        params=params,
    )


def make_xnes(n: int, p: int = None, kappa_m: float = 1.0, kappa_sigma: float = 1.0,
              weights=None) -> AlgorithmSpec:
    params = _comma_params(n, p, kappa_m, kappa_sigma, weights)
    return AlgorithmSpec(
        name="xnes",
        p=len(params.weights),
        m=n,
        sol=sol_es,
        g1=lambda state, y: comma_mean_update(state, y, params),
        g2=lambda sigma, y: xnes_sigma_update(sigma, y, params),
        sampler=_comma_sampler(len(params.weights), n),
        params=params,
    )


def make_sa(n: int, p: int = None, tau: float = None) -> AlgorithmSpec:
    if p is None:
        p = default_population(n)
    if tau is None:
        tau = 1.0 / math.sqrt(n)
    params = SaParams(tau=float(tau), p=int(p))
    return AlgorithmSpec(
        name="sa",
        p=params.p,
        m=n + 1,
        sol=lambda state, u: sol_sa(state, u, params.tau),
        g1=lambda state, y: state.x
        + state.sigma * math.exp(params.tau * y.coords[0, -1]) * y.coords[0, :-1],
        g2=lambda sigma, y: sa_sigma_update(sigma, y, params),
        sampler=_sa_sampler(params.p, n),
        params=params,
    )


def make_oneplusone(n: int, p_target: float = 0.2,
                    kappa_sigma: float = 1.0 / 3.0) -> AlgorithmSpec:
    if not 0 < p_target < 1:
        raise ValueError("p_target must be in (0, 1)")
    if not kappa_sigma > 0:
        raise ValueError("kappa_sigma must be positive")
    params = OnePlusOneParams(
        gamma=math.exp(kappa_sigma), q=(1.0 - p_target) / p_target
    )
    return AlgorithmSpec(
        name="oneplusone",
        p=2,
        m=n,
        sol=sol_es,
        g1=lambda state, y: state.x + state.sigma * y.coords[0],
        g2=lambda sigma, y: oneplusone_sigma_update(sigma, y, params),
        sampler=_plus_sampler(n),
        ord_fn=rank_improvement_first,
        evals_per_iter=1,
        params=params,
    )


def make_constant(n: int) -> AlgorithmSpec:
    """(1+1) acceptance with a fixed step-size: the baseline with no
    adaptation (the step-size multiplier is identically 1)."""
    return AlgorithmSpec(
        name="constant",
        p=2,
        m=n,
        sol=sol_es,
        g1=lambda state, y: state.x + state.sigma * y.coords[0],
        g2=lambda sigma, y: sigma,
        sampler=_plus_sampler(n),
        ord_fn=rank_improvement_first,
        evals_per_iter=1,
        params=None,
    )


_FACTORIES = {
    "csa": make_csa,
    "xnes": make_xnes,
    "sa": make_sa,
    "oneplusone": make_oneplusone,
    "constant": make_constant,
}


def make_algorithm(name: str, n: int, **params) -> AlgorithmSpec:
    """Build an algorithm by registered name ("csa", "xnes", "sa",
    "oneplusone", "constant")."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {name!r}; known: {', '.join(ALGORITHM_NAMES)}"
        ) from None
    return factory(n, **params)
