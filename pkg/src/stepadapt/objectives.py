"""Scaling-invariant objective functions and randomized checkers.

A function f is scaling-invariant with respect to a reference point
x_star when, for every rho > 0, scaling two centered points by rho never
changes which of the two has the smaller value.  Norms, convex
quadratics, linear functions, and any strictly increasing transform of
these all qualify.

The checkers here are randomized refuters, not proofs: "consistent"
means no violation was found in the given number of trials, while
"refuted" comes with a concrete, re-checkable witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import RngStream


@dataclass(frozen=True, eq=False)
class Objective:
    """An objective f(x) = base(x - x_star).

    ``base`` is the centered form (reference at the origin) and must be
    vectorized: input shape (..., n) -> output shape (...).  Calling the
    objective evaluates the shifted form.
    """

    label: str
    base: Callable
    x_star: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_star", np.asarray(self.x_star, dtype=float))
        if self.x_star.ndim != 1:
            raise ValueError("x_star must be a 1-d vector")

    @property
    def n(self) -> int:
        return self.x_star.shape[0]

    def __call__(self, x):
        return self.base(np.asarray(x, dtype=float) - self.x_star)

    @property
    def centered(self) -> "Objective":
        """The same objective with the reference moved to the origin."""
        return Objective(self.label, self.base, np.zeros_like(self.x_star))

    def shifted(self, offset) -> "Objective":
        """x -> f(x - offset): the reference moves by +offset."""
        return Objective(self.label, self.base, self.x_star + np.asarray(offset, float))

    def rescaled_argument(self, alpha: float) -> "Objective":
        """x -> f(alpha * x) as an Objective (reference x_star / alpha)."""
        base = self.base
        a = float(alpha)
        return Objective(
            f"{self.label}(a*x)", lambda v, _b=base, _a=a: _b(_a * v), self.x_star / a
        )


def sphere(n: int = None, x_star=None) -> Objective:
    """Sum of squared coordinates."""
    x_star = _resolve_reference(n, x_star)
    return Objective("sphere", lambda v: np.square(v).sum(axis=-1), x_star)


def quadratic(H, x_star=None) -> Objective:
    """Convex quadratic v' H v with H symmetric positive definite."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be a square matrix")
    if not np.allclose(H, H.T, rtol=1e-12, atol=1e-12):
        raise ValueError("H must be symmetric")
    if np.linalg.eigvalsh(H).min() <= 0:
        raise ValueError("H must be positive definite")
    x_star = _resolve_reference(H.shape[0], x_star)
    return Objective(
        "quadratic", lambda v: np.einsum("...i,ij,...j->...", v, H, v), x_star
    )


def ellipsoid(n: int = None, condition: float = 10.0, x_star=None) -> Objective:
    """Diagonal quadratic with eigenvalues spaced geometrically from 1
    to ``condition``."""
    x_star = _resolve_reference(n, x_star)
    n = x_star.shape[0]
    if condition <= 0:
        raise ValueError("condition must be positive")
    exponents = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    diag = condition ** exponents
    obj = Objective(
        f"ellipsoid:{condition:g}", lambda v: (diag * np.square(v)).sum(axis=-1), x_star
    )
    return obj


def pnorm(p: float, n: int = None, x_star=None) -> Objective:
    """The p-norm (sum |v_i|^p)^(1/p), positively homogeneous of degree 1."""
    if p <= 0:
        raise ValueError("p must be positive")
    x_star = _resolve_reference(n, x_star)
    return Objective(
        f"pnorm:{p:g}",
        lambda v: np.power(np.power(np.abs(v), p).sum(axis=-1), 1.0 / p),
        x_star,
    )


def linear(n: int = None, x_star=None) -> Objective:
    """First coordinate of v; scaling-invariant without a finite optimum."""
    x_star = _resolve_reference(n, x_star)
    return Objective("linear", lambda v: np.asarray(v)[..., 0], x_star)


def composite(g: Callable, base: Objective, g_label: str = "g") -> Objective:
    """g o f for strictly increasing g; preserves scaling-invariance."""
    inner = base.base
    return Objective(
        f"{g_label}∘{base.label}", lambda v: g(inner(v)), base.x_star
    )


def quarter_power(u):
    """sign(u) |u|^(1/4): strictly increasing on all of R (the odd
    extension keeps it defined on objectives with negative values)."""
    u = np.asarray(u)
    return np.sign(u) * np.power(np.abs(u), 0.25)


def make_objective(kind: str, x_star=None, *, n: int = None, H=None, p: float = None,
                   g: Callable = None, base: Objective = None,
                   g_label: str = "g") -> Objective:
    """Build a cataloged objective by kind: "sphere", "quadratic",
    "pnorm", "linear", or "composite"."""
    if kind == "sphere":
        return sphere(n=n, x_star=x_star)
    if kind == "quadratic":
        if H is None:
            raise ValueError("quadratic needs H")
        return quadratic(H, x_star=x_star)
    if kind == "pnorm":
        if p is None:
            raise ValueError("pnorm needs p")
        return pnorm(p, n=n, x_star=x_star)
    if kind == "linear":
        return linear(n=n, x_star=x_star)
    if kind == "composite":
        if g is None or base is None:
            raise ValueError("composite needs g and base")
        return composite(g, base, g_label=g_label)
    raise ValueError(f"unknown objective kind {kind!r}")


_COMPOSITE_PREFIXES = {
    "g^{1/4}": (quarter_power, "g^{1/4}"),
    "quarter": (quarter_power, "g^{1/4}"),
    "arctan": (np.arctan, "arctan"),
}


def parse_objective(text: str, n: int, x_star=None) -> Objective:
    """Parse a registry name: "sphere", "linear", "pnorm:<p>",
    "quad:<v1,...,vn>", "quad:cond:<k>", optionally prefixed by a
    composite transform "g^{1/4}∘" or "arctan∘" ("." also
    accepted as the separator)."""
    text = text.strip()
    for sep in ("∘", "."):
        if sep in text:
            prefix, rest = text.split(sep, 1)
            if prefix in _COMPOSITE_PREFIXES:
                g, g_label = _COMPOSITE_PREFIXES[prefix]
                return composite(g, parse_objective(rest, n, x_star), g_label=g_label)

    if text == "sphere":
        return sphere(n=n, x_star=x_star)
    if text == "linear":
        return linear(n=n, x_star=x_star)
    if text.startswith("pnorm:"):
        return pnorm(float(text.split(":", 1)[1]), n=n, x_star=x_star)
    if text.startswith("quad:"):
        spec = text.split(":", 1)[1]
        if spec.startswith("cond:"):
            return ellipsoid(n=n, condition=float(spec.split(":", 1)[1]), x_star=x_star)
        diag = np.array([float(v) for v in spec.split(",")])
        if diag.shape != (n,):
            raise ValueError(f"quad spectrum needs {n} values, got {diag.size}")
        return quadratic(np.diag(diag), x_star=x_star)
    raise ValueError(f"unknown objective {text!r}")


def catalog(n: int) -> list:
    """The standard scaling-invariant test set in dimension n."""
    objs = [sphere(n=n), ellipsoid(n=n, condition=10.0), pnorm(1.0, n=n), linear(n=n)]
    if n >= 2:
        objs.insert(2, quadratic(np.diag(np.arange(1.0, n + 1.0))))
    return objs


@dataclass(frozen=True, eq=False)
class Witness:
    """A concrete input triple that violated a checked property."""

    x: np.ndarray
    y: Optional[np.ndarray]
    rho: float
    alpha: Optional[float] = None


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    verdict: str  # "consistent" or "refuted"
    witness: Optional[Witness]
    trials: int

    def __post_init__(self):
        if self.verdict not in ("consistent", "refuted"):
            raise ValueError("verdict must be 'consistent' or 'refuted'")
        if self.verdict == "refuted" and self.witness is None:
            raise ValueError("a refutation needs a witness")

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


def default_rho_grid() -> np.ndarray:
    """Nine scale factors 2^-4 .. 2^4 (powers of two limit float noise)."""
    return 2.0 ** np.arange(-4.0, 5.0)


def _scaling_flip(f: Objective, a, b, rho: float) -> bool:
    # comparisons are exact on evaluated values: the property is about
    # orderings, with ties read as <= on both sides
    fa, fb = float(f.base(a)), float(f.base(b))
    ga, gb = float(f.base(rho * a)), float(f.base(rho * b))
    return ((fa <= fb) != (ga <= gb)) or ((fb <= fa) != (gb <= ga))


def check_scaling_invariance(f: Objective, trials: int = 1000, rho_grid=None,
                             rng: RngStream = None) -> InvarianceReport:
    """Sample point pairs around x_star and look for an ordering flip
    under scaling.  Refutes on the first violation found."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rho_grid = default_rho_grid() if rho_grid is None else np.asarray(rho_grid, float)
    if np.any(rho_grid <= 0):
        raise ValueError("all rho must be positive")
    rng = rng if rng is not None else RngStream(0)
    n = f.n
    for trial in range(int(trials)):
        a = rng.standard_normal(n)
        b = rng.standard_normal(n)
        fa, fb = float(f.base(a)), float(f.base(b))
        ab = fa <= fb
        ba = fb <= fa
        for rho in rho_grid:
            ga, gb = float(f.base(rho * a)), float(f.base(rho * b))
            if ((ga <= gb) != ab) or ((gb <= ga) != ba):
                witness = Witness(x=a + f.x_star, y=b + f.x_star, rho=float(rho))
                return InvarianceReport("refuted", witness, trial + 1)
    return InvarianceReport("consistent", None, int(trials))


def check_positive_homogeneity(f: Objective, alpha: float, trials: int = 1000,
                               rng: RngStream = None,
                               rel_tol: float = 1e-9) -> InvarianceReport:
    """Check f(rho v) = rho^alpha f(v) within rel_tol on random (v, rho)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = rng if rng is not None else RngStream(0)
    n = f.n
    log_hi = math.log(16.0)
    for trial in range(int(trials)):
        v = rng.standard_normal(n)
        rho = math.exp(rng.uniform(-log_hi, log_hi))
        if _homogeneity_violation(f, v, rho, alpha, rel_tol):
            witness = Witness(x=v + f.x_star, y=None, rho=rho, alpha=float(alpha))
            return InvarianceReport("refuted", witness, trial + 1)
    return InvarianceReport("consistent", None, int(trials))


def _homogeneity_violation(f, v, rho, alpha, rel_tol) -> bool:
    lhs = float(f.base(rho * v))
    rhs = rho ** alpha * float(f.base(v))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs - rhs) > rel_tol * scale


def recheck_witness(f: Objective, witness: Witness, rel_tol: float = 1e-9) -> bool:
    """Re-evaluate a witness; True means the violation reproduces."""
    a = np.asarray(witness.x, float) - f.x_star
    if witness.alpha is None:
        b = np.asarray(witness.y, float) - f.x_star
        return _scaling_flip(f, a, b, witness.rho)
    return _homogeneity_violation(f, a, witness.rho, witness.alpha, rel_tol)


def _resolve_reference(n, x_star) -> np.ndarray:
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
        if x_star.ndim != 1:
            raise ValueError("x_star must be a 1-d vector")
        if n is not None and x_star.shape[0] != n:
            raise ValueError("x_star length disagrees with n")
        return x_star
    if n is None:
        raise ValueError("need n or x_star")
    return np.zeros(int(n))
