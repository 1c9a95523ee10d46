"""Bayes pairs, maximum-Bayes-risk distributions and minimax duality checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import CredalSet, Distribution
from .losses import (
    LossSpec,
    PropertyValueSet,
    bayes_risk,
    expected_loss,
    loss_value,
    precise_property,
)
from .solver import PropertyDomain, SolverError, SolverParams, elicit

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BayesPairResult:
    theta_set: PropertyValueSet
    risk: float
    clamped: bool = False

    def to_dict(self) -> dict:
        return {"theta_set": self.theta_set.to_list(), "risk": self.risk,
                "clamped": self.clamped}


@dataclass(frozen=True)
class WorstCaseResult:
    distribution: Distribution
    weights: np.ndarray
    bayes_risk: float
    certificate_gap: float
    fw_gap: float
    iterations: int
    near_max_generators: tuple[int, ...] = ()
    method: str = "frank-wolfe"

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.weights.tolist(),
            "weights": self.weights.tolist(),
            "bayes_risk": self.bayes_risk,
            "certificate_gap": self.certificate_gap,
            "fw_gap": self.fw_gap,
            "iterations": self.iterations,
            "near_max_generators": list(self.near_max_generators),
            "method": self.method,
        }


@dataclass(frozen=True)
class InclusionReport:
    elicited: PropertyValueSet
    theta_star: PropertyValueSet
    worst_case: WorstCaseResult
    violation: float
    holds: bool
    strict: bool
    tol: float = field(default=0.0)

    def to_dict(self) -> dict:
        return {
            "elicited": self.elicited.to_list(),
            "theta_star": self.theta_star.to_list(),
            "violation": self.violation,
            "holds": self.holds,
            "strict_subset": self.strict,
            "tol": self.tol,
        }


def bayes_pair(spec: LossSpec, P: Distribution, domain: PropertyDomain) -> BayesPairResult:
    """Minimizer set and minimum of ``theta -> E_P[loss]`` over ``domain``.

    When the unconstrained minimizers all fall outside the domain, the
    risk is convex in theta so the nearest domain endpoint is the
    constrained minimizer; ``clamped`` is then set.
    """
    full = precise_property(spec, P)
    inside = full.clip(domain.lo, domain.hi)
    if not inside.is_empty:
        return BayesPairResult(inside, bayes_risk(spec, P))
    t = domain.lo if full.hi < domain.lo else domain.hi
    return BayesPairResult(PropertyValueSet.point(t), expected_loss(spec, P, t), clamped=True)


def _bayes_point(spec, P, domain):
    # lowest point of the constrained minimizer set, and the minimum itself
    bp = bayes_pair(spec, P, domain)
    return bp.theta_set.lo, bp.risk


class _Concave:
    """``lambda -> L(lambda @ G)`` with envelope supergradients."""

    def __init__(self, credal, spec, domain):
        self.credal = credal
        self.spec = spec
        self.domain = domain
        self.G = credal.matrix
        self.z = credal.space.points

    def dist(self, lam):
        return Distribution(self.credal.space, np.clip(lam, 0.0, None) @ self.G)

    def evaluate(self, lam):
        theta, val = _bayes_point(self.spec, self.dist(lam), self.domain)
        grad = self.G @ loss_value(self.spec, theta, self.z)
        return val, grad, theta


def _line_search(obj: _Concave, lam, d, tmax, grad0):
    """Maximize the concave ``t -> L(lam + t d)`` on ``[0, tmax]``."""
    if grad0 @ d <= 0:
        return 0.0
    spec = obj.spec
    if spec.kind == "squared":
        z = obj.z
        P0 = lam @ obj.G
        dP = d @ obj.G
        m0, dm = P0 @ z, dP @ z
        q0, dq = P0 @ z**2, dP @ z**2
        lo, hi = obj.domain.lo, obj.domain.hi
        if lo <= m0 <= hi and lo <= m0 + tmax * dm <= hi:
            # variance along the segment is q(t) - m(t)**2
            if dm == 0.0:
                return tmax if dq > 0 else 0.0
            t = (dq - 2.0 * dm * m0) / (2.0 * dm * dm)
            return min(max(t, 0.0), tmax)
    _, g_end, _ = obj.evaluate(lam + tmax * d)
    if g_end @ d >= 0:
        return tmax
    a, b = 0.0, tmax
    for _ in range(100):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        _, g, _ = obj.evaluate(lam + mid * d)
        if g @ d > 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _frank_wolfe(obj: _Concave, params: SolverParams):
    m = obj.G.shape[0]
    lam = np.full(m, 1.0 / m)
    best = None
    for k in range(params.max_iters + 1):
        val, grad, _ = obj.evaluate(lam)
        s = int(np.argmax(grad))
        gap = float(grad[s] - lam @ grad)
        if best is None or val > best[1]:
            best = (lam.copy(), val, gap)
        if gap <= params.value_tol:
            return lam, val, gap, k
        if k == params.max_iters:
            break
        # pairwise step: move mass from the worst supported vertex to s
        support = np.flatnonzero(lam > 0)
        v = int(support[np.argmin(grad[support])])
        d = np.zeros(m)
        d[s] += 1.0
        d[v] -= 1.0
        tmax = lam[v]
        t = _line_search(obj, lam, d, tmax, grad)
        if t <= 0.0:
            # no ascent along the pair; fall back to a plain FW step
            d = -lam.copy()
            d[s] += 1.0
            t = _line_search(obj, lam, d, 1.0, grad)
            if t <= 0.0:
                return lam, val, gap, k
        elif t >= tmax:
            d[v] = -1.0
        lam = lam + t * d
        if t >= tmax and d[v] == -1.0:
            lam[v] = 0.0  # drop step
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum()
    raise SolverError(
        f"Frank-Wolfe gap {best[2]:.3g} above {params.value_tol:.3g} "
        f"after {params.max_iters} iterations",
        best=best[0], gap=best[2],
    )


def _matrix_game(obj: _Concave):
    """Exact maximin for piecewise-linear losses as a linear program.

    For these losses the expected loss is piecewise linear in theta with
    kinks at the outcomes, so the minimum over the domain is attained at an
    outcome inside the domain or at a domain endpoint.
    """
    lo, hi = obj.domain.lo, obj.domain.hi
    cands = np.unique(np.concatenate([[lo, hi], obj.z[(obj.z > lo) & (obj.z < hi)]]))
    A = obj.G @ loss_value(obj.spec, cands[None, :], obj.z[:, None])  # (m, k)
    m, k = A.shape
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A.T, np.ones((k, 1))])
    A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(k), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * m + [(None, None)], method="highs")
    if res.status != 0:
        raise SolverError(f"maximin linear program failed: {res.message}")
    lam = np.clip(res.x[:m], 0.0, None)
    return lam / lam.sum(), int(res.nit)


def worst_case_distribution(credal: CredalSet, spec: LossSpec, domain: PropertyDomain,
                            params: SolverParams | None = None) -> WorstCaseResult:
    """Distribution in the hull maximizing the (domain-constrained) Bayes risk.

    Squared and entropic losses use pairwise Frank-Wolfe over generator
    weights; the piecewise-linear losses solve the equivalent finite matrix
    game exactly by linear programming.
    """
    params = params or SolverParams()
    obj = _Concave(credal, spec, domain)
    if spec.strictly_convex:
        lam, val, gap, iters = _frank_wolfe(obj, params)
        method = "frank-wolfe"
    else:
        lam, iters = _matrix_game(obj)
        val, grad, _ = obj.evaluate(lam)
        gap = float(grad.max() - lam @ grad)
        method = "linear-program"
        if gap > params.value_tol:
            log.debug("supergradient gap %.3g at LP optimum (non-smooth Bayes risk)", gap)
    P_star = obj.dist(lam)
    minimax = elicit(credal, spec, domain, params).value
    gen_risks = np.array([_bayes_point(spec, g, domain)[1] for g in credal.generators])
    near = tuple(int(i) for i in np.flatnonzero(gen_risks >= val - params.value_tol))
    return WorstCaseResult(P_star, lam, float(val), float(minimax - val), float(gap),
                           iters, near, method)


def duality_gap(credal: CredalSet, spec: LossSpec, domain: PropertyDomain,
                params: SolverParams | None = None) -> float:
    """Minimax value minus maximin value; zero under strong duality."""
    return worst_case_distribution(credal, spec, domain, params).certificate_gap


def check_inclusion(credal: CredalSet, spec: LossSpec, domain: PropertyDomain,
                    params: SolverParams | None = None, tol: float | None = None
                    ) -> InclusionReport:
    """Test that every elicited value is a Bayes act of the worst-case distribution."""
    params = params or SolverParams()
    tol = params.theta_tol if tol is None else tol
    f = elicit(credal, spec, domain, params).argmin
    wc = worst_case_distribution(credal, spec, domain, params)
    theta_star = bayes_pair(spec, wc.distribution, domain).theta_set
    violation = f.excess_over(theta_star)
    strict = theta_star.excess_over(f) > tol
    return InclusionReport(f, theta_star, wc, float(violation), violation <= tol, strict, tol)
