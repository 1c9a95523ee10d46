"""Finite outcome spaces, probability vectors and finitely generated credal sets.

A credal set is stored as a list of generating distributions. The imprecise
probability it stands for is the closed convex hull of those generators; the
hull itself is never built, since every quantity computed downstream is linear
in the distribution and therefore attains its extremes at a generator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SUM_TOL = 1e-12
RENORMALIZE_TOL = 1e-9
# Bounds polytopes grow as n * 2**(n-1) candidate vertices.
MAX_BOUNDS_OUTCOMES = 16


class CredalError(ValueError):
    """Base class for invalid inputs to the credal-set machinery."""


class SpaceMismatchError(CredalError):
    pass


class DomainError(CredalError):
    pass


class InfeasibleError(CredalError):
    pass


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class OutcomeSpace:
    """Strictly increasing finite set of real outcomes."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError(f"outcome space needs at least 2 points, got {pts.size}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("outcome points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("outcome points must be strictly increasing")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def n(self) -> int:
        return self.points.size

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, OutcomeSpace):
            return NotImplemented
        return self is other or np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def __repr__(self):
        return f"OutcomeSpace({self.points.tolist()})"


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector on an :class:`OutcomeSpace`.

    Inputs whose total is within ``1e-9`` of one are renormalized; tiny
    negative entries (above ``-1e-12``) are clipped to zero. Anything else is
    rejected with :class:`DomainError`.
    """

    space: OutcomeSpace
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != self.space.n:
            raise DomainError(
                f"expected {self.space.n} weights, got shape {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        if np.any(w < -SUM_TOL):
            raise DomainError(f"negative weight {w.min():.3g}")
        w = np.clip(w, 0.0, None)
        total = w.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise DomainError(f"weights sum to {total:.12g}, not 1")
        if total != 1.0:
            w = w / total
        if np.any(w > 1.0):
            w = np.minimum(w, 1.0)
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def point_mass(cls, space: OutcomeSpace, index: int) -> "Distribution":
        w = np.zeros(space.n)
        w[index] = 1.0
        return cls(space, w)

    @classmethod
    def uniform(cls, space: OutcomeSpace) -> "Distribution":
        return cls(space, np.full(space.n, 1.0 / space.n))

    def mean(self) -> float:
        return expectation(self, self.space.points)

    def key(self) -> bytes:
        return self.weights.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Distribution({self.weights.tolist()})"


@dataclass(frozen=True, eq=False)
class CredalSet:
    """Non-empty finite generator list standing for its closed convex hull."""

    space: OutcomeSpace
    generators: tuple[Distribution, ...]

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise DomainError("a credal set needs at least one generator")
        for g in gens:
            if g.space != self.space:
                raise SpaceMismatchError("generator lives on a different outcome space")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "_matrix", _frozen([g.weights for g in gens]))

    @classmethod
    def from_weights(cls, points: Sequence[float] | OutcomeSpace,
                     weights: Iterable[Sequence[float]]) -> "CredalSet":
        space = points if isinstance(points, OutcomeSpace) else OutcomeSpace(points)
        return cls(space, tuple(Distribution(space, w) for w in weights))

    @property
    def matrix(self) -> np.ndarray:
        """Generators stacked as rows, shape ``(m, n)``."""
        return self._matrix

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __repr__(self):
        return f"CredalSet({self.space.points.tolist()}, {self.matrix.tolist()})"


@dataclass(frozen=True, eq=False)
class IntervalBounds:
    """Lower and upper probability bounds on each singleton outcome."""

    space: OutcomeSpace
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        n = self.space.n
        if lo.shape != (n,) or hi.shape != (n,):
            raise DomainError(f"bounds must have length {n}")
        if np.any(lo < 0) or np.any(hi > 1):
            raise DomainError("bounds must lie in [0, 1]")
        if np.any(lo > hi):
            raise InfeasibleError("some lower bound exceeds its upper bound")
        if lo.sum() > 1 + SUM_TOL or hi.sum() < 1 - SUM_TOL:
            raise InfeasibleError(
                f"empty feasible set: sum(lower)={lo.sum():.12g}, sum(upper)={hi.sum():.12g}"
            )
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))


def _same_space(a, b):
    if a.space != b.space:
        raise SpaceMismatchError("operands live on different outcome spaces")


def mix(P: Distribution, Q: Distribution, alpha: float) -> Distribution:
    """Convex combination ``alpha * P + (1 - alpha) * Q``."""
    _same_space(P, Q)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1.0:
        return P
    if alpha == 0.0:
        return Q
    return Distribution(P.space, alpha * P.weights + (1.0 - alpha) * Q.weights)


def _dedupe(gens: Iterable[Distribution]) -> tuple[Distribution, ...]:
    seen = set()
    out = []
    for g in gens:
        k = g.key()
        if k not in seen:
            seen.add(k)
            out.append(g)
    return tuple(out)


def convex_combine_sets(A: CredalSet, B: CredalSet, alpha: float) -> CredalSet:
    """Generators of ``alpha*A + (1-alpha)*B``: all pairwise mixes."""
    _same_space(A, B)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    gens = (mix(P, Q, alpha) for P in A.generators for Q in B.generators)
    return CredalSet(A.space, _dedupe(gens))


def union_sets(*sets: CredalSet) -> CredalSet:
    """Union of credal sets; exact duplicate generators are dropped."""
    if not sets:
        raise DomainError("union of zero credal sets")
    for s in sets[1:]:
        _same_space(sets[0], s)
    return CredalSet(sets[0].space, _dedupe(g for s in sets for g in s.generators))


def bounds_to_generators(b: IntervalBounds) -> CredalSet:
    """Vertices of ``{p : lower <= p <= upper, sum(p) = 1}``.

    At a vertex all but at most one coordinate sit on a bound, so it suffices
    to pick the free coordinate and a lower/upper pattern for the rest.
    """
    n = b.space.n
    if n > MAX_BOUNDS_OUTCOMES:
        raise DomainError(f"vertex enumeration limited to {MAX_BOUNDS_OUTCOMES} outcomes")
    lo, hi = b.lower, b.upper
    span = max(1.0, float(hi.sum()))
    tol = 4 * np.finfo(float).eps * span
    verts: list[np.ndarray] = []
    for free in range(n):
        others = [i for i in range(n) if i != free]
        for pattern in itertools.product((0, 1), repeat=n - 1):
            p = np.empty(n)
            for i, up in zip(others, pattern):
                p[i] = hi[i] if up else lo[i]
            rest = 1.0 - p[others].sum()
            if rest < lo[free] - tol or rest > hi[free] + tol:
                continue
            p[free] = min(max(rest, lo[free]), hi[free])
            verts.append(p)
    # The same vertex is reached from several free coordinates, with
    # different rounding; merge within a few ulps.
    unique: list[np.ndarray] = []
    for v in verts:
        if not any(np.max(np.abs(v - u)) <= 8 * tol for u in unique):
            unique.append(v)
    unique.sort(key=lambda v: tuple(-v))
    return CredalSet(b.space, tuple(Distribution(b.space, v) for v in unique))


def expectation(P: Distribution, values) -> float:
    v = np.asarray(values, dtype=float)
    if v.shape != (P.space.n,):
        raise DomainError(f"expected {P.space.n} values, got shape {v.shape}")
    return float(P.weights @ v)
