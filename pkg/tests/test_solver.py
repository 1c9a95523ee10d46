import numpy as np
import pytest

from credal_elicit import (
    CredalSet,
    Distribution,
    DomainError,
    IntervalBounds,
    LossSpec,
    OutcomeSpace,
    PropertyDomain,
    SolverError,
    SolverParams,
    bounds_to_generators,
    elicit,
    elicit_grid_oracle,
    precise_property,
    union_sets,
    upper_risk,
)
from credal_elicit.losses import expected_loss
from conftest import random_instance, random_spec
from oracles import brent_min, expected_loss_fn

KINDS = ["squared", "absolute", "pinball", "entropic"]
SQ = LossSpec.squared()


@pytest.fixture
def binary_half():
    space = OutcomeSpace([0.0, 1.0])
    credal = bounds_to_generators(IntervalBounds(space, [0.5, 0.0], [1.0, 0.5]))
    return credal, PropertyDomain(-1.0, 2.0)


class TestParams:
    def test_defaults(self):
        p = SolverParams()
        assert (p.theta_tol, p.value_tol, p.max_iters) == (1e-9, 1e-10, 200)

    @pytest.mark.parametrize("kw", [{"theta_tol": 0.0}, {"theta_tol": 1e-13},
                                    {"value_tol": -1.0}, {"max_iters": 0}])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            SolverParams(**kw)

    def test_empty_domain(self):
        with pytest.raises(DomainError):
            PropertyDomain(1.0, 1.0)


class TestUpperRisk:
    def test_singleton(self, rng):
        credal, _ = random_instance(rng, m_max=1)
        P = credal.generators[0]
        for kind in KINDS:
            spec = random_spec(rng, kind)
            assert abs(upper_risk(credal, spec, 0.3) - expected_loss(spec, P, 0.3)) <= 1e-12

    @pytest.mark.parametrize("theta", [-1.0, 0.0, 0.25, 0.5, 0.9, 2.0])
    def test_binary_half_closed_form(self, binary_half, theta):
        credal, _ = binary_half
        expected = theta**2 - min(0.0, 2 * theta - 1) / 2
        assert abs(upper_risk(credal, SQ, theta) - expected) <= 1e-14

    def test_dominates_generators(self, rng):
        for _ in range(50):
            credal, _ = random_instance(rng)
            means = credal.matrix @ credal.space.points
            theta = float(rng.uniform(means.min(), means.max()))
            top = upper_risk(credal, SQ, theta)
            for g in credal.generators:
                assert top >= expected_loss(SQ, g, theta) - 1e-15

    def test_hull_points_never_exceed(self, rng):
        for _ in range(50):
            credal, _ = random_instance(rng)
            spec = random_spec(rng, KINDS[rng.integers(4)])
            theta = float(rng.uniform(-3, 3))
            P = Distribution(credal.space, rng.dirichlet(np.ones(len(credal))) @ credal.matrix)
            assert expected_loss(spec, P, theta) <= upper_risk(credal, spec, theta) + 1e-12

    @pytest.mark.parametrize("kind", KINDS)
    def test_convex(self, kind, rng):
        for _ in range(100):
            credal, _ = random_instance(rng)
            spec = random_spec(rng, kind)
            t1, t2 = rng.uniform(-4, 4, 2)
            a = rng.uniform()
            lhs = upper_risk(credal, spec, a * t1 + (1 - a) * t2)
            rhs = a * upper_risk(credal, spec, t1) + (1 - a) * upper_risk(credal, spec, t2)
            assert lhs <= rhs + 1e-10


class TestElicit:
    def test_binary_half(self, binary_half):
        res = elicit(binary_half[0], SQ, binary_half[1])
        assert abs(res.argmin.lo - 0.5) <= 1e-8 and abs(res.argmin.hi - 0.5) <= 1e-8
        assert abs(res.value - 0.25) <= 1e-8

    def test_counterexample_P(self, counter_sets, dom02):
        res = elicit(counter_sets["P"], SQ, dom02)
        assert res.argmin.hausdorff(precise_property(SQ, counter_sets["P"].generators[1])) <= 1e-8
        assert abs(res.value - 1.0) <= 1e-8

    def test_intersection_singleton(self, counter_sets, dom02):
        assert elicit(counter_sets["PQ"], SQ, dom02).argmin.hausdorff(
            precise_property(SQ, counter_sets["PQ"].generators[0])) <= 1e-8

    def test_absolute_flat(self):
        credal = CredalSet.from_weights([0.0, 1.0], [(0.5, 0.5)])
        res = elicit(credal, LossSpec.absolute(), PropertyDomain(0.0, 1.0))
        assert res.argmin.to_list() == [[0.0, 1.0]]
        assert res.value == 0.5

    def test_clamps_at_domain_edge(self):
        credal = CredalSet.from_weights([0.0, 1.0], [(0.0, 1.0)])
        res = elicit(credal, SQ, PropertyDomain(-1.0, 0.5))
        assert res.argmin.to_list() == [[0.5, 0.5]]

    def test_budget_error_carries_iterate(self, binary_half):
        with pytest.raises(SolverError) as err:
            elicit(binary_half[0], SQ, binary_half[1], SolverParams(max_iters=3))
        assert err.value.best is not None

    @pytest.mark.parametrize("kind", KINDS)
    def test_singleton_reduces_to_precise(self, kind, rng):
        for _ in range(50):
            credal, dom = random_instance(rng, m_max=1)
            spec = random_spec(rng, kind)
            f = elicit(credal, spec, dom).argmin
            assert f.hausdorff(precise_property(spec, credal.generators[0])) <= 1e-8

    @pytest.mark.parametrize("kind", ["squared", "entropic"])
    def test_unique_minimizer(self, kind, rng):
        for _ in range(100):
            credal, dom = random_instance(rng)
            assert elicit(credal, random_spec(rng, kind), dom).argmin.width <= 2e-9

    @pytest.mark.parametrize("kind", KINDS)
    def test_value_matches_brent(self, kind, rng):
        for _ in range(30):
            credal, dom = random_instance(rng)
            spec = random_spec(rng, kind)
            fns = [expected_loss_fn(kind, credal.space.points, g.weights, spec.tau, spec.gamma)
                   for g in credal.generators]
            _, v = brent_min(lambda t: max(float(f(t)) for f in fns), dom.lo, dom.hi)
            res = elicit(credal, spec, dom)
            assert res.value <= v + 1e-10
            assert v - res.value <= 1e-7

    def test_enlarging_set_never_lowers_value(self, rng):
        for _ in range(50):
            credal, dom = random_instance(rng)
            extra = CredalSet(credal.space, (Distribution(credal.space,
                                                          rng.dirichlet(np.ones(credal.space.n))),))
            spec = random_spec(rng, KINDS[rng.integers(4)])
            v0 = elicit(credal, spec, dom).value
            v1 = elicit(union_sets(credal, extra), spec, dom).value
            assert v1 >= v0 - 1e-10

    def test_active_generators_attain_value(self, counter_sets, dom02):
        res = elicit(counter_sets["P"], SQ, dom02)
        assert res.active_generators == (0, 1)


class TestGridOracle:
    def test_binary_half(self, binary_half):
        res = elicit_grid_oracle(binary_half[0], SQ, binary_half[1], 10**5)
        assert abs(res.argmin.midpoint() - 0.5) <= 2 * 3 / 1e5

    def test_singleton_nearest_grid_point(self):
        credal = CredalSet.from_weights([0.0, 1.0, 2.0], [(0.2, 0.3, 0.5)])
        dom = PropertyDomain(0.0, 2.0)
        res = elicit_grid_oracle(credal, SQ, dom, 1001)
        grid = np.linspace(0, 2, 1001)
        nearest = grid[np.argmin(np.abs(grid - 1.3))]
        assert res.argmin.to_list() == [[nearest, nearest]]

    def test_rejects_tiny_grid(self, binary_half):
        with pytest.raises(DomainError):
            elicit_grid_oracle(binary_half[0], SQ, binary_half[1], 1)
