"""Randomized verification of the structural properties of elicited IP-properties.

Each check draws independent random instances (one generator per trial,
seeded from ``(seed, check, trial)``) so runs are reproducible and trials can
be evaluated in any order or in parallel without changing the reports.

Instance law: outcomes are sorted uniform draws on ``[-3, 3]``; generator
weights are uniform on the simplex (normalized exponentials); the property
domain is the outcome range widened by one on each side.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .bayes import bayes_pair, check_inclusion, worst_case_distribution
from .core import CredalSet, Distribution, OutcomeSpace, convex_combine_sets, mix, union_sets
from .losses import LossSpec, PropertyValueSet
from .solver import PropertyDomain, SolverError, SolverParams, elicit

DEFAULT_LOSSES = (
    LossSpec.squared(),
    LossSpec.absolute(),
    LossSpec.pinball(0.3),
    LossSpec.entropic(1.0),
)

# stable ids keep per-check random streams independent of check order
_CHECK_IDS = {
    "hull_invariance": 1,
    "levelset_convexity": 2,
    "union_closure": 3,
    "uniqueness": 4,
    "precise_restriction": 5,
    "strong_duality": 6,
    "bayes_inclusion": 7,
}


@dataclass(frozen=True)
class TrialConfig:
    """Harness configuration.

    ``n_outcomes`` and ``n_generators`` are upper limits; each trial draws its
    sizes uniformly from ``[2, n_outcomes]`` and ``[1, n_generators]``.
    """

    seed: int = 42
    n_outcomes: int = 6
    n_generators: int = 4
    losses: tuple[LossSpec, ...] = DEFAULT_LOSSES
    trials: int = 200
    tolerances: SolverParams = SolverParams()
    check_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if not 2 <= self.n_outcomes <= 8:
            raise ValueError(f"n_outcomes must lie in [2, 8], got {self.n_outcomes}")
        if not 1 <= self.n_generators <= 6:
            raise ValueError(f"n_generators must lie in [1, 6], got {self.n_generators}")
        if not self.losses:
            raise ValueError("at least one loss is required")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "losses", tuple(self.losses))

    def loss_for(self, trial: int) -> LossSpec:
        return self.losses[trial % len(self.losses)]


@dataclass
class CheckReport:
    check_name: str
    trials_run: int = 0
    failures: list = field(default_factory=list)
    max_violation: float = 0.0
    tolerance: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "trials_run": self.trials_run,
            "failures": self.failures,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "notes": self.notes,
        }


def describe(credal: CredalSet, spec: LossSpec, domain: PropertyDomain) -> dict:
    """Scenario-shaped description sufficient to replay an instance."""
    return {
        "outcomes": credal.space.points.tolist(),
        "credal": {"generators": credal.matrix.tolist()},
        "loss": spec.to_dict(),
        "domain": {"lo": domain.lo, "hi": domain.hi},
    }


def trial_rng(seed: int, check: str, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, _CHECK_IDS.get(check, 0), trial])


def random_space(rng, n_max: int) -> OutcomeSpace:
    n = int(rng.integers(2, n_max + 1))
    while True:
        pts = np.sort(rng.uniform(-3.0, 3.0, n))
        if np.all(np.diff(pts) > 0):
            return OutcomeSpace(pts)


def random_weights(rng, n: int) -> np.ndarray:
    w = rng.exponential(size=n)
    return w / w.sum()


def random_credal(rng, space: OutcomeSpace, m_max: int, m_min: int = 1) -> CredalSet:
    m = int(rng.integers(m_min, m_max + 1))
    return CredalSet(space, tuple(Distribution(space, random_weights(rng, space.n))
                                  for _ in range(m)))


def default_domain(space: OutcomeSpace) -> PropertyDomain:
    return PropertyDomain(float(space.points[0]) - 1.0, float(space.points[-1]) + 1.0)


def _pull(credal: CredalSet, target: Distribution, t: float) -> CredalSet:
    return CredalSet(credal.space, tuple(mix(target, g, t) for g in credal.generators))


def project_to_level(rng, space, spec, domain, theta0, params, m_max, attempts=6):
    """Random credal set whose elicited set contains ``theta0``.

    Pulls every generator of a random set toward a point mass on the far
    side of ``theta0`` and bisects the pull strength until the elicited set
    reaches ``theta0``. Returns ``None`` when no attempt lands.
    """
    z = space.points
    tol = params.theta_tol
    for _ in range(attempts):
        base = random_credal(rng, space, m_max)
        f0 = elicit(base, spec, domain, params).argmin
        if f0.contains(theta0, tol):
            return base
        if f0.hi < theta0:
            idx = np.flatnonzero(z >= theta0 - tol)
        else:
            idx = np.flatnonzero(z <= theta0 + tol)[::-1]
        if idx.size == 0:
            continue
        target = Distribution.point_mass(space, int(idx[0]))
        if spec.strictly_convex:
            # the elicited point moves continuously with the pull strength
            def offset(t):
                return elicit(_pull(base, target, t), spec, domain, params).argmin.midpoint() - theta0

            t = brentq(offset, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            cand = _pull(base, target, t)
            if elicit(cand, spec, domain, params).argmin.contains(theta0, tol):
                return cand
            continue
        sign0 = -1 if f0.hi < theta0 else 1
        lo_t, hi_t = 0.0, 1.0
        for _ in range(60):
            t = 0.5 * (lo_t + hi_t)
            cand = _pull(base, target, t)
            f = elicit(cand, spec, domain, params).argmin
            if f.contains(theta0, tol):
                return cand
            side = -1 if f.hi < theta0 else 1
            if side == sign0:
                lo_t = t
            else:
                hi_t = t
        end = _pull(base, target, hi_t)
        if elicit(end, spec, domain, params).argmin.contains(theta0, tol):
            return end
    return None


def manufacture_family(rng, cfg: TrialConfig, spec: LossSpec, size: int):
    """``size`` credal sets on one space sharing an elicited value.

    Returns ``(sets, theta0, domain)`` or ``None`` if projection failed.
    """
    params = cfg.tolerances
    space = random_space(rng, cfg.n_outcomes)
    domain = default_domain(space)
    first = random_credal(rng, space, cfg.n_generators)
    f = elicit(first, spec, domain, params).argmin
    # interval ends sit at outcomes, where projection lands exactly
    theta0 = f.lo if not spec.strictly_convex else f.midpoint()
    sets = [first]
    for _ in range(size - 1):
        other = project_to_level(rng, space, spec, domain, theta0, params, cfg.n_generators)
        if other is None:
            return None
        sets.append(other)
    return sets, theta0, domain


def _run_trials(cfg: TrialConfig, name: str, body: Callable[[np.random.Generator, int], Optional[dict]],
                tolerance: float) -> CheckReport:
    """Evaluate ``body`` per trial; merge outcomes in trial order."""
    def one(i):
        return body(trial_rng(cfg.seed, name, i), i)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            outcomes = list(pool.map(one, range(cfg.trials)))
    else:
        outcomes = [one(i) for i in range(cfg.trials)]

    report = CheckReport(name, tolerance=tolerance)
    skipped = 0
    for i, out in enumerate(outcomes):
        if out is None:
            skipped += 1
            continue
        report.trials_run += 1
        v = float(out["violation"])
        report.max_violation = max(report.max_violation, v)
        if v > tolerance or out.get("error"):
            report.failures.append({"trial": i, **out})
        for key, val in out.get("notes", {}).items():
            report.notes.setdefault(key, []).append(val)
    if skipped:
        report.notes["skipped"] = skipped
    return report


def check_hull_invariance(cfg: TrialConfig) -> CheckReport:
    """Adding convex combinations of generators leaves the argmin set unchanged."""
    params = cfg.tolerances

    def body(rng, i):
        spec = cfg.loss_for(i)
        space = random_space(rng, cfg.n_outcomes)
        domain = default_domain(space)
        base = random_credal(rng, space, cfg.n_generators)
        k = int(rng.integers(1, 4))
        lam = rng.dirichlet(np.ones(len(base)), size=k)
        extra = CredalSet(space, tuple(Distribution(space, l @ base.matrix) for l in lam))
        aug = union_sets(base, extra)
        f0 = elicit(base, spec, domain, params).argmin
        f1 = elicit(aug, spec, domain, params).argmin
        return {"violation": f0.hausdorff(f1), "instance": describe(base, spec, domain),
                "augmented": aug.matrix.tolist()}

    return _run_trials(cfg, "hull_invariance", body, cfg.check_tol)


def check_levelset_convexity(cfg: TrialConfig) -> CheckReport:
    """Mixtures of two sets sharing an elicited value keep eliciting it."""
    params = cfg.tolerances

    def body(rng, i):
        spec = cfg.loss_for(i)
        fam = manufacture_family(rng, cfg, spec, 2)
        if fam is None:
            return None
        (A, B), theta0, domain = fam
        alpha = float(rng.uniform())
        f = elicit(convex_combine_sets(A, B, alpha), spec, domain, params).argmin
        return {"violation": f.distance(theta0), "theta": theta0, "alpha": alpha,
                "instance": describe(A, spec, domain), "other": B.matrix.tolist()}

    return _run_trials(cfg, "levelset_convexity", body, cfg.check_tol)


def check_union_closure(cfg: TrialConfig, max_arity: int = 3) -> CheckReport:
    """Unions of sets sharing an elicited value keep eliciting it.

    Trials cycle through family sizes 2 to ``max_arity``.
    """
    if max_arity < 2:
        raise ValueError("max_arity must be at least 2")
    params = cfg.tolerances

    def body(rng, i):
        spec = cfg.loss_for(i)
        fam = manufacture_family(rng, cfg, spec, 2 + i % (max_arity - 1))
        if fam is None:
            return None
        sets, theta0, domain = fam
        f = elicit(union_sets(*sets), spec, domain, params).argmin
        return {"violation": f.distance(theta0), "theta": theta0,
                "instance": describe(sets[0], spec, domain),
                "others": [s.matrix.tolist() for s in sets[1:]]}

    return _run_trials(cfg, "union_closure", body, cfg.check_tol)


def check_uniqueness(cfg: TrialConfig) -> CheckReport:
    """Strictly convex losses give a single minimizer; others are only recorded."""
    params = cfg.tolerances
    limit = 2 * params.theta_tol

    def body(rng, i):
        spec = cfg.loss_for(i)
        space = random_space(rng, cfg.n_outcomes)
        domain = default_domain(space)
        credal = random_credal(rng, space, cfg.n_generators)
        f = elicit(credal, spec, domain, params).argmin
        width = f.width
        out = {"instance": describe(credal, spec, domain), "width": width,
               "notes": {f"width_{spec.kind}": width}}
        # only strictly convex losses are held to the width limit
        out["violation"] = max(width - limit, 0.0) if spec.strictly_convex else 0.0
        return out

    report = _run_trials(cfg, "uniqueness", body, 0.0)
    report.tolerance = limit
    for key in [k for k in report.notes if k.startswith("width_")]:
        widths = report.notes.pop(key)
        report.notes[key.replace("width_", "max_width_")] = max(widths)
    return report


def check_precise_restriction(cfg: TrialConfig) -> CheckReport:
    """Singleton credal sets elicit the ordinary (precise) property."""
    params = cfg.tolerances

    def body(rng, i):
        spec = cfg.loss_for(i)
        space = random_space(rng, cfg.n_outcomes)
        domain = default_domain(space)
        P = Distribution(space, random_weights(rng, space.n))
        f = elicit(CredalSet(space, (P,)), spec, domain, params).argmin
        expected = bayes_pair(spec, P, domain).theta_set
        return {"violation": f.hausdorff(expected),
                "instance": describe(CredalSet(space, (P,)), spec, domain)}

    return _run_trials(cfg, "precise_restriction", body, cfg.check_tol)


def _solver_guard(fn):
    try:
        return fn()
    except SolverError as exc:
        return {"violation": float("inf"), "error": str(exc)}


def check_strong_duality(cfg: TrialConfig) -> CheckReport:
    """Minimax equals maximin: elicited value vs maximum Bayes risk."""
    params = cfg.tolerances

    def body(rng, i):
        spec = cfg.loss_for(i)
        space = random_space(rng, cfg.n_outcomes)
        domain = default_domain(space)
        credal = random_credal(rng, space, cfg.n_generators)

        def run():
            wc = worst_case_distribution(credal, spec, domain, params)
            gap = wc.certificate_gap
            # weak duality never excuses a negative gap beyond value_tol
            v = abs(gap) if gap >= -params.value_tol else float("inf")
            return {"violation": v, "gap": gap, "instance": describe(credal, spec, domain)}

        out = _solver_guard(run)
        out.setdefault("instance", describe(credal, spec, domain))
        return out

    return _run_trials(cfg, "strong_duality", body, cfg.check_tol)


def check_bayes_inclusion(cfg: TrialConfig) -> CheckReport:
    """Elicited values lie in the Bayes act set of the worst-case distribution."""
    params = cfg.tolerances

    def body(rng, i):
        spec = cfg.loss_for(i)
        space = random_space(rng, cfg.n_outcomes)
        domain = default_domain(space)
        credal = random_credal(rng, space, cfg.n_generators)

        def run():
            rep = check_inclusion(credal, spec, domain, params, tol=cfg.check_tol)
            return {"violation": rep.violation, "instance": describe(credal, spec, domain),
                    "notes": {"strict_subset": rep.strict}}

        out = _solver_guard(run)
        out.setdefault("instance", describe(credal, spec, domain))
        return out

    report = _run_trials(cfg, "bayes_inclusion", body, cfg.check_tol)
    strict = report.notes.pop("strict_subset", [])
    report.notes["strict_subset_count"] = int(sum(strict))
    return report


COUNTEREXAMPLE_OUTCOMES = (0.0, 1.0, 2.0)
COUNTEREXAMPLE_SETS = {
    "P": ((1.0, 0.0, 0.0), (0.5, 0.0, 0.5)),
    "Q": ((1.0, 0.0, 0.0), (0.25, 0.5, 0.25)),
    "P_and_Q": ((1.0, 0.0, 0.0),),
}
# values asserted for the intersection counterexample
COUNTEREXAMPLE_CLAIMS = {"P": 1.0, "Q": 1.0, "P_and_Q": 0.0}


def reproduce_intersection_counterexample(params: SolverParams | None = None,
                                          tol: float | None = None) -> CheckReport:
    """Squared loss on {0, 1, 2}: the two sets and their intersection.

    Every claim is recomputed; mismatches are reported with the measured
    elicited set, never corrected.
    """
    params = params or SolverParams()
    tol = params.theta_tol if tol is None else tol
    spec = LossSpec.squared()
    domain = PropertyDomain(0.0, 2.0)
    report = CheckReport("intersection_counterexample", tolerance=tol)
    for name, gens in COUNTEREXAMPLE_SETS.items():
        credal = CredalSet.from_weights(COUNTEREXAMPLE_OUTCOMES, gens)
        res = elicit(credal, spec, domain, params)
        claim = COUNTEREXAMPLE_CLAIMS[name]
        v = PropertyValueSet.point(claim).hausdorff(res.argmin)
        report.trials_run += 1
        report.max_violation = max(report.max_violation, v)
        report.notes[name] = {"claimed": claim, "elicited": res.argmin.to_list(),
                              "value": res.value}
        if v > tol:
            report.failures.append({"set": name, "violation": v,
                                    "instance": describe(credal, spec, domain),
                                    "claimed": claim, "elicited": res.argmin.to_list()})
    return report


def run_suite(cfg: TrialConfig) -> list[CheckReport]:
    """All checks in a fixed order; deterministic for a given config."""
    return [
        check_hull_invariance(cfg),
        check_levelset_convexity(cfg),
        check_union_closure(cfg),
        reproduce_intersection_counterexample(cfg.tolerances),
        check_uniqueness(cfg),
        check_precise_restriction(cfg),
        check_strong_duality(cfg),
        check_bayes_inclusion(cfg),
    ]
