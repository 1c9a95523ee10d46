"""Gamma-maximin elicitation: minimize the upper risk over a compact interval.

The upper risk ``R(theta) = max_g E_g[loss(theta, Z)]`` is a pointwise max of
convex functions, hence convex. Its minimizer set is an interval ``[a, b]``;
both ends are located by bisection on the one-sided derivatives of ``R``,
which are available exactly from the generators that attain the max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CredalSet, DomainError
from .losses import LossSpec, PropertyValueSet, RiskOverflowError, loss_value

_EPS = np.finfo(float).eps


class SolverError(RuntimeError):
    """Iteration budget exhausted; ``best`` holds the last iterate."""

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


@dataclass(frozen=True)
class PropertyDomain:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise DomainError("property domain bounds must be finite")
        if not self.lo < self.hi:
            raise DomainError(f"empty property domain [{self.lo}, {self.hi}]")

    def clip(self, theta: float) -> float:
        return min(max(theta, self.lo), self.hi)


@dataclass(frozen=True)
class SolverParams:
    """Tolerances for :func:`elicit` and the worst-case search.

    ``flat_tol`` is a slope band: a point is reported as a minimizer when
    zero lies within ``flat_tol`` of the subdifferential of the upper risk.
    """

    theta_tol: float = 1e-9
    value_tol: float = 1e-10
    flat_tol: float = 1e-12
    max_iters: int = 200

    def __post_init__(self):
        for name in ("theta_tol", "value_tol", "flat_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v}")
        if self.theta_tol < 1e-12:
            raise DomainError("theta_tol must be at least 1e-12")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise DomainError("max_iters must be a positive integer")


@dataclass(frozen=True)
class MinimaxResult:
    argmin: PropertyValueSet
    value: float
    active_generators: tuple[int, ...]
    iterations: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "argmin": self.argmin.to_list(),
            "value": self.value,
            "active_generators": list(self.active_generators),
            "iterations": self.iterations,
        }


class UpperRisk:
    """Per-generator risks and one-sided slopes of the upper risk."""

    def __init__(self, credal: CredalSet, spec: LossSpec):
        self.spec = spec
        self.G = credal.matrix
        self.z = credal.space.points
        if spec.kind == "squared":
            self._means = self.G @ self.z
        elif spec.kind == "entropic":
            self._pos = self.G > 0

    def risks(self, theta: float) -> np.ndarray:
        spec = self.spec
        if spec.kind == "entropic":
            r = theta + np.exp(self._log_tilt(theta)) / spec.gamma
        else:
            r = self.G @ loss_value(spec, theta, self.z)
        if not np.all(np.isfinite(r)):
            raise RiskOverflowError(f"upper risk not finite at theta={theta!r}")
        return r

    def _log_tilt(self, theta: float) -> np.ndarray:
        # log E_g[exp(gamma * (Z - theta))] per generator
        a = self.spec.gamma * (self.z - theta)
        shift = np.max(np.where(self._pos, a, -np.inf), axis=1)
        with np.errstate(under="ignore"):
            s = np.sum(self.G * np.exp(np.minimum(a[None, :] - shift[:, None], 0.0)), axis=1)
        return np.log(s) + shift

    def slopes(self, theta: float) -> tuple[np.ndarray, np.ndarray]:
        """Left and right derivatives of every generator's risk."""
        spec = self.spec
        if spec.kind == "squared":
            s = 2.0 * (theta - self._means)
            return s, s
        if spec.kind == "entropic":
            t = np.exp(self._log_tilt(theta))
            if not np.all(np.isfinite(t)):
                raise RiskOverflowError(f"entropic slope not finite at theta={theta!r}")
            s = 1.0 - t
            return s, s
        tau = spec.level
        scale = 2.0 if spec.kind == "absolute" else 1.0
        cdf_right = self.G @ (self.z <= theta)
        cdf_left = self.G @ (self.z < theta)
        return scale * (cdf_left - tau), scale * (cdf_right - tau)

    def __call__(self, theta: float) -> float:
        return float(np.max(self.risks(theta)))

    def one_sided(self, theta: float) -> tuple[float, float]:
        """Left and right derivatives of the upper risk at ``theta``."""
        r = self.risks(theta)
        top = r.max()
        active = r >= top - 64 * _EPS * (1.0 + abs(top))
        left, right = self.slopes(theta)
        return float(left[active].min()), float(right[active].max())


def upper_risk(credal: CredalSet, spec: LossSpec, theta: float) -> float:
    """``sup`` of the expected loss over the hull of the generators."""
    return UpperRisk(credal, spec)(float(theta))


def _bisect(pred, x_false, x_true, stop, max_iters):
    """Shrink a bracket with ``pred(x_false)`` false and ``pred(x_true)`` true."""
    it = 0
    while abs(x_true - x_false) > stop:
        mid = 0.5 * (x_false + x_true)
        if mid == x_false or mid == x_true:
            break
        it += 1
        if it > max_iters:
            raise SolverError(
                f"bisection did not converge in {max_iters} iterations", best=mid
            )
        if pred(mid):
            x_true = mid
        else:
            x_false = mid
    return 0.5 * (x_false + x_true), it


def elicit(credal: CredalSet, spec: LossSpec, domain: PropertyDomain,
           params: SolverParams | None = None) -> MinimaxResult:
    """Minimizer set and value of the upper risk over ``domain``.

    Raises :class:`SolverError` when a bisection exceeds ``params.max_iters``
    and :class:`RiskOverflowError` when the risk is not finite.
    """
    params = params or SolverParams()
    R = UpperRisk(credal, spec)
    lo, hi = float(domain.lo), float(domain.hi)
    band = params.flat_tol
    stop = params.theta_tol * 1e-3

    # left end: first theta whose right slope is not clearly negative
    def rises(t):
        return R.one_sided(t)[1] >= -band

    # right end: last theta whose left slope is not clearly positive
    def falls(t):
        return R.one_sided(t)[0] <= band

    iters = 0
    if rises(lo):
        a = lo
    elif not rises(hi):
        a = hi
    else:
        a, k = _bisect(rises, lo, hi, stop, params.max_iters)
        iters += k
    if falls(hi):
        b = hi
    elif not falls(a):
        b = a
    else:
        b, k = _bisect(falls, hi, a, stop, params.max_iters)
        iters += k
    if b < a:
        a = b = 0.5 * (a + b)

    mid = 0.5 * (a + b)
    values = [R(a), R(b), R(mid)]
    value = min(values)
    risks = R.risks(mid)
    active = tuple(int(i) for i in np.flatnonzero(risks >= value - params.value_tol))
    argmin = PropertyValueSet.point(a) if a == b else PropertyValueSet.interval(a, b)
    return MinimaxResult(argmin, float(value), active, iters,
                         diagnostics={"endpoint_values": values})


def elicit_grid_oracle(credal: CredalSet, spec: LossSpec, domain: PropertyDomain,
                       grid_points: int) -> MinimaxResult:
    """Brute-force minimization of the upper risk on a uniform grid.

    Grid points whose upper risk is within a rounding band of the grid
    minimum are grouped into contiguous runs.
    """
    if grid_points < 2:
        raise DomainError("grid oracle needs at least 2 points")
    grid = np.linspace(domain.lo, domain.hi, int(grid_points))
    z = credal.space.points
    losses = loss_value(spec, grid[None, :], z[:, None])
    risk = np.max(credal.matrix @ losses, axis=0)
    if not np.all(np.isfinite(risk)):
        raise RiskOverflowError("upper risk overflowed on the grid")
    best = float(risk.min())
    hit = risk <= best + 1e-12 * (1.0 + abs(best))
    runs = []
    idx = np.flatnonzero(hit)
    start = prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            runs.append((grid[start], grid[prev]))
            start = i
        prev = i
    runs.append((grid[start], grid[prev]))
    k = int(np.argmin(risk))
    active = tuple(int(i) for i in np.flatnonzero(credal.matrix @ losses[:, k] >= best - 1e-10))
    return MinimaxResult(PropertyValueSet(tuple(runs)), best, active, int(grid_points))
