"""Generic machinery for rank-based step-size adaptive search.

An algorithm keeps a state (x, sigma): an incumbent point in R^n and a
positive step-size.  One iteration draws a block of p raw sample
coordinates, turns each into a candidate solution, ranks the candidates
by objective value, and feeds the rank-ordered block into a pair of
update maps (one for x, one for sigma).  The objective enters only
through the ranking, never through raw values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class EvaluationError(RuntimeError):
    """The objective returned a non-finite value.

    Carries the offending point in ``point`` and the value in ``value``.
    """

    def __init__(self, point, value):
        self.point = np.asarray(point)
        self.value = value
        super().__init__(f"objective returned non-finite value {value!r}")


class InternalInvariantError(RuntimeError):
    """An internal invariant was violated (e.g. a non-positive step-size
    multiplier).  Should be unreachable for the shipped algorithms."""


class RngStream(object):
    """Seeded random stream with deterministic sub-stream derivation.

    The same seed always reproduces the same sequence of draws.
    Independent runs (replicates) should each use ``spawn(run_index)``,
    which derives disjoint streams from (seed, run_index).
    """

    def __init__(self, seed: int, _key: tuple = ()):
        self.seed = int(seed)
        self._key = tuple(_key)
        self._gen = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=self._key)
        )

    def spawn(self, index: int) -> "RngStream":
        """Derive the independent sub-stream for run number ``index``."""
        return RngStream(self.seed, self._key + (int(index),))

    def entropy_word(self) -> int:
        """A 32-bit word deterministically derived from (seed, spawn key),
        for seeding external generators."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._key)
        return int(ss.generate_state(1)[0])

    def standard_normal(self, shape):
        return self._gen.standard_normal(shape)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self._key})"


@dataclass(frozen=True, eq=False)
class AlgorithmState:
    """The pair (x, sigma): incumbent point and step-size."""

    x: np.ndarray
    sigma: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "sigma", float(self.sigma))
        if x.ndim != 1:
            raise ValueError("state x must be a 1-d vector")
        if not np.isfinite(x).all():
            raise ValueError("state x must be finite")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True, eq=False)
class SampleBlock:
    """One iteration's raw randomness: p coordinates, each a vector of
    dimension m, stored as an array of shape (p, m)."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 2:
            raise ValueError("sample block must have shape (p, m)")

    @property
    def p(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class RankingPermutation:
    """Permutation sorting p objective values ascending.

    ``indices[k]`` is the original position of the rank-k candidate
    (0-based, so ``values[indices[0]]`` is the best value).
    """

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if sorted(idx) != list(range(len(idx))):
            raise ValueError("indices must be a permutation of 0..p-1")

    @property
    def p(self) -> int:
        return len(self.indices)

    @property
    def is_identity(self) -> bool:
        return self.indices == tuple(range(len(self.indices)))


def rank_values(values: Sequence[float]) -> RankingPermutation:
    """Rank p objective values ascending; ties keep the lower original
    index first (stable).

    Ties occur with probability zero under continuous sampling, but a
    deterministic rule is required for exact replay tests.
    """
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.shape[0] < 1:
        raise ValueError("need a non-empty 1-d value list")
    if not np.isfinite(vals).all():
        raise ValueError("cannot rank non-finite values")
    order = np.argsort(vals, kind="stable")
    return RankingPermutation(tuple(int(i) for i in order))


def apply_permutation(s: RankingPermutation, u: SampleBlock) -> SampleBlock:
    """Reorder the block's coordinates by rank: output k is input s(k)."""
    if s.p != u.p:
        raise ValueError(f"permutation size {s.p} != block size {u.p}")
    return SampleBlock(u.coords[list(s.indices)])


@dataclass(frozen=True, eq=False)
class AlgorithmSpec:
    """A concrete algorithm: solution map, update maps, and sampler.

    ``sol(state, u)`` maps one raw coordinate (or a batch, shape
    ``(k, m)``) to candidate solutions.  ``g1(state, y)`` returns the new
    incumbent from the rank-ordered block y; ``g2(sigma, y)`` returns the
    new step-size and by construction never sees x.  ``sampler(rng)``
    draws one SampleBlock with exactly p coordinates of dimension m.

    ``ord_fn`` is the ranking rule (stable ``rank_values`` unless the
    algorithm needs a different tie convention).  ``evals_per_iter`` is
    the number of objective evaluations charged per iteration in traces.
    """

    name: str
    p: int
    m: int
    sol: Callable
    g1: Callable
    g2: Callable
    sampler: Callable
    ord_fn: Callable = rank_values
    evals_per_iter: int = 0
    params: object = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.evals_per_iter == 0:
            object.__setattr__(self, "evals_per_iter", self.p)


def evaluate_candidates(f, candidates: np.ndarray) -> np.ndarray:
    """Evaluate the objective on a (p, n) batch of candidates.

    Raises EvaluationError on the first non-finite value.
    """
    values = np.asarray(f(candidates), dtype=float)
    if values.shape != (candidates.shape[0],):
        raise ValueError(
            "objective must map a (p, n) batch to p values, got shape "
            f"{values.shape}"
        )
    if not np.isfinite(values).all():
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise EvaluationError(candidates[bad], float(values[bad]))
    return values


def step(state: AlgorithmState, u: SampleBlock, spec: AlgorithmSpec, f) -> AlgorithmState:
    """One transition: rank candidates built from u, then update (x, sigma).

    Pure function of its arguments: identical inputs give bit-identical
    outputs.  ``f`` must accept a batch of shape (p, n) and return p
    values.
    """
    if u.p != spec.p:
        raise ValueError(f"sample block has {u.p} coordinates, spec wants {spec.p}")
    candidates = spec.sol(state, u.coords)
    values = evaluate_candidates(f, candidates)
    s = spec.ord_fn(values)
    y = apply_permutation(s, u)
    x_next = spec.g1(state, y)
    sigma_next = float(spec.g2(state.sigma, y))
    if not sigma_next > 0:
        raise InternalInvariantError(
            f"step-size update produced {sigma_next!r} (must be > 0)"
        )
    return AlgorithmState(x_next, sigma_next)
