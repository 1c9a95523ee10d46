"""Loss catalog: values, subgradients in theta, and closed-form Bayes pairs.

Supported kinds:

* ``squared``   -- ``(theta - z)**2``, elicits the mean; Bayes risk is the variance.
* ``absolute``  -- ``|theta - z|``, elicits the median set.
* ``pinball``   -- ``(1[z <= theta] - tau) * (theta - z)``, elicits the tau-quantile set.
* ``entropic``  -- ``theta + exp(gamma * (z - theta)) / gamma``, elicits the
  entropic risk ``log E[exp(gamma * Z)] / gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.special import logsumexp

from .core import DomainError, Distribution

KINDS = ("squared", "absolute", "pinball", "entropic")
# CDF values this close to tau are treated as hitting it exactly.
CDF_TOL = 1e-12


class RiskOverflowError(ArithmeticError):
    """Expected loss is not finite (entropic loss with large gamma * z)."""


@dataclass(frozen=True)
class LossSpec:
    kind: str
    tau: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown loss kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "pinball":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise DomainError(f"pinball loss needs tau in (0, 1), got {self.tau}")
        elif self.tau is not None:
            raise DomainError(f"{self.kind} loss takes no tau")
        if self.kind == "entropic":
            if self.gamma is None or not (0.0 < self.gamma < math.inf):
                raise DomainError(f"entropic loss needs gamma in (0, inf), got {self.gamma}")
        elif self.gamma is not None:
            raise DomainError(f"{self.kind} loss takes no gamma")

    @classmethod
    def squared(cls):
        return cls("squared")

    @classmethod
    def absolute(cls):
        return cls("absolute")

    @classmethod
    def pinball(cls, tau: float):
        return cls("pinball", tau=tau)

    @classmethod
    def entropic(cls, gamma: float):
        return cls("entropic", gamma=gamma)

    @property
    def strictly_convex(self) -> bool:
        return self.kind in ("squared", "entropic")

    @property
    def level(self) -> float:
        """Quantile level for the piecewise-linear kinds."""
        if self.kind == "absolute":
            return 0.5
        if self.kind == "pinball":
            return self.tau
        raise AttributeError(f"{self.kind} loss has no quantile level")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.tau is not None:
            d["tau"] = self.tau
        if self.gamma is not None:
            d["gamma"] = self.gamma
        return d


@dataclass(frozen=True)
class PropertyValueSet:
    """Sorted, disjoint closed intervals; ``(a, a)`` encodes a point."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not a <= b:
                raise DomainError(f"malformed interval [{a}, {b}]")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if not b0 < a1:
                raise DomainError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def point(cls, x: float) -> "PropertyValueSet":
        return cls(((x, x),))

    @classmethod
    def interval(cls, a: float, b: float) -> "PropertyValueSet":
        return cls(((a, b),))

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple[float, float]]) -> "PropertyValueSet":
        """Sort and merge touching or overlapping intervals."""
        merged: list[list[float]] = []
        for a, b in sorted((float(a), float(b)) for a, b in intervals):
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    @property
    def width(self) -> float:
        """Total length of the hull of the set."""
        return self.hi - self.lo

    def midpoint(self) -> float:
        a, b = self.intervals[0]
        return 0.5 * (a + b)

    def distance(self, x: float) -> float:
        return min(max(a - x, 0.0, x - b) for a, b in self.intervals)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.distance(x) <= tol

    def excess_over(self, other: "PropertyValueSet") -> float:
        """One-sided Hausdorff distance ``sup_{x in self} d(x, other)``.

        Endpoints suffice: distance to a union of intervals is maximized
        over a segment at an endpoint or at a gap midpoint of ``other``.
        """
        worst = 0.0
        for a, b in self.intervals:
            cands = [a, b]
            for (_, e0), (s1, _) in zip(other.intervals, other.intervals[1:]):
                mid = 0.5 * (e0 + s1)
                if a <= mid <= b:
                    cands.append(mid)
            worst = max(worst, max(other.distance(x) for x in cands))
        return worst

    def hausdorff(self, other: "PropertyValueSet") -> float:
        return max(self.excess_over(other), other.excess_over(self))

    def clip(self, lo: float, hi: float) -> "PropertyValueSet":
        return PropertyValueSet(
            tuple((max(a, lo), min(b, hi)) for a, b in self.intervals if b >= lo and a <= hi)
        )

    def to_list(self) -> list[list[float]]:
        return [[a, b] for a, b in self.intervals]


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise RiskOverflowError("expected loss overflowed")
    return x


def loss_value(spec: LossSpec, theta, z):
    """Loss at ``theta`` for outcome(s) ``z``; broadcasts like numpy."""
    theta = np.asarray(theta, dtype=float)
    z = np.asarray(z, dtype=float)
    d = theta - z
    if spec.kind == "squared":
        out = d * d
    elif spec.kind == "absolute":
        out = np.abs(d)
    elif spec.kind == "pinball":
        out = (np.where(z <= theta, 1.0, 0.0) - spec.tau) * d
    else:
        g = spec.gamma
        out = theta + np.exp(-g * d) / g
    return out[()] if out.ndim == 0 else out


def loss_subgradient(spec: LossSpec, theta: float, z: float) -> tuple[float, float]:
    """Subdifferential of ``loss_value`` in theta as a closed interval."""
    d = float(theta) - float(z)
    if spec.kind == "squared":
        s = 2.0 * d
        return (s, s)
    if spec.kind == "entropic":
        s = 1.0 - math.exp(-spec.gamma * d)
        return (s, s)
    tau = spec.level
    # absolute is twice the median pinball loss
    scale = 2.0 if spec.kind == "absolute" else 1.0
    if d > 0:
        s = scale * (1.0 - tau)
        return (s, s)
    if d < 0:
        s = -scale * tau
        return (s, s)
    return (-scale * tau, scale * (1.0 - tau))


def _quantile_set(P: Distribution, tau: float) -> PropertyValueSet:
    z = P.space.points
    w = P.weights
    cdf = np.cumsum(w)
    k = int(np.argmax(cdf >= tau - CDF_TOL))
    if abs(cdf[k] - tau) > CDF_TOL:
        return PropertyValueSet.point(z[k])
    # CDF sits at tau from z[k] until the next outcome with positive mass
    nxt = np.flatnonzero(w[k + 1:] > 0)
    if nxt.size == 0:
        return PropertyValueSet.point(z[k])
    return PropertyValueSet.interval(z[k], z[k + 1 + nxt[0]])


def entropic_risk(P: Distribution, gamma: float) -> float:
    """``log E_P[exp(gamma * Z)] / gamma`` computed in log space."""
    w = P.weights
    mask = w > 0
    val = logsumexp(gamma * P.space.points[mask], b=w[mask]) / gamma
    return float(_check_finite(val))


def precise_property(spec: LossSpec, P: Distribution) -> PropertyValueSet:
    """Minimizer set of ``theta -> E_P[loss(theta, Z)]`` over the real line."""
    if spec.kind == "squared":
        return PropertyValueSet.point(P.mean())
    if spec.kind == "entropic":
        return PropertyValueSet.point(entropic_risk(P, spec.gamma))
    return _quantile_set(P, spec.level)


def expected_loss(spec: LossSpec, P: Distribution, theta: float) -> float:
    return float(P.weights @ loss_value(spec, theta, P.space.points))


def bayes_risk(spec: LossSpec, P: Distribution) -> float:
    """Minimum expected loss under ``P``."""
    z = P.space.points
    w = P.weights
    if spec.kind == "squared":
        m = float(w @ z)
        return float(w @ (z - m) ** 2)
    if spec.kind == "entropic":
        return entropic_risk(P, spec.gamma) + 1.0 / spec.gamma
    # Any point of the quantile set gives the same value.
    return expected_loss(spec, P, precise_property(spec, P).lo)
