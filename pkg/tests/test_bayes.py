import numpy as np
import pytest

from credal_elicit import (
    CredalSet,
    Distribution,
    IntervalBounds,
    LossSpec,
    OutcomeSpace,
    PropertyDomain,
    bayes_pair,
    bayes_risk,
    bounds_to_generators,
    check_inclusion,
    duality_gap,
    elicit,
    precise_property,
    worst_case_distribution,
)
from credal_elicit.losses import expected_loss
from conftest import random_instance, random_spec
from oracles import expected_loss_fn, stationary_min

KINDS = ["squared", "absolute", "pinball", "entropic"]
SQ = LossSpec.squared()
Z3 = OutcomeSpace([0.0, 1.0, 2.0])


@pytest.fixture
def binary_half():
    space = OutcomeSpace([0.0, 1.0])
    credal = bounds_to_generators(IntervalBounds(space, [0.5, 0.0], [1.0, 0.5]))
    return credal, PropertyDomain(-1.0, 2.0)


class TestBayesPair:
    def test_binary_half(self):
        bp = bayes_pair(SQ, Distribution.uniform(OutcomeSpace([0, 1])), PropertyDomain(-1, 2))
        assert bp.theta_set.to_list() == [[0.5, 0.5]]
        assert abs(bp.risk - 0.25) <= 1e-15
        assert not bp.clamped

    def test_point_mass(self):
        bp = bayes_pair(SQ, Distribution.point_mass(Z3, 2), PropertyDomain(0, 2))
        assert bp.theta_set.to_list() == [[2.0, 2.0]] and bp.risk == 0.0

    def test_counterexample_Q_generator(self):
        bp = bayes_pair(SQ, Distribution(Z3, [0.25, 0.5, 0.25]), PropertyDomain(0, 2))
        assert bp.theta_set.to_list() == [[1.0, 1.0]]

    def test_clamped(self):
        P = Distribution(Z3, [0, 0, 1])
        bp = bayes_pair(SQ, P, PropertyDomain(0, 1.5))
        assert bp.clamped
        assert bp.theta_set.to_list() == [[1.5, 1.5]]
        assert bp.risk == pytest.approx(0.25)

    def test_partial_overlap_is_not_clamped(self):
        P = Distribution.uniform(OutcomeSpace([0, 1]))
        bp = bayes_pair(LossSpec.absolute(), P, PropertyDomain(0.5, 3))
        assert bp.theta_set.to_list() == [[0.5, 1.0]]
        assert not bp.clamped

    def test_mean_variance_against_brent(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 7))
            z = np.sort(rng.uniform(-3, 3, n))
            P = Distribution(OutcomeSpace(z), rng.dirichlet(np.ones(n)))
            t, v = stationary_min(lambda x: float(expected_loss_fn("squared", z, P.weights)(x)), -4, 4)
            bp = bayes_pair(SQ, P, PropertyDomain(-4, 4))
            assert abs(bp.theta_set.lo - t) <= 1e-8
            assert abs(bp.risk - v) <= 1e-8


class TestWorstCase:
    def test_counterexample_P(self, counter_sets, dom02):
        wc = worst_case_distribution(counter_sets["P"], SQ, dom02)
        np.testing.assert_allclose(wc.distribution.weights, [0.5, 0, 0.5], atol=1e-8)
        assert abs(wc.bayes_risk - 1.0) <= 1e-10

    def test_singleton(self, rng):
        credal, dom = random_instance(rng, m_max=1)
        wc = worst_case_distribution(credal, SQ, dom)
        np.testing.assert_allclose(wc.distribution.weights, credal.generators[0].weights, atol=1e-15)

    def test_binary_half(self, binary_half):
        wc = worst_case_distribution(*_args(binary_half, SQ))
        np.testing.assert_allclose(wc.distribution.weights, [0.5, 0.5], atol=1e-8)
        assert abs(wc.bayes_risk - 0.25) <= 1e-10

    @pytest.mark.parametrize("kind", ["absolute", "pinball"])
    def test_piecewise_linear_uses_exact_game(self, kind, rng):
        credal, dom = random_instance(rng)
        assert worst_case_distribution(credal, random_spec(rng, kind), dom).method == "linear-program"

    @pytest.mark.parametrize("kind", KINDS)
    def test_beats_random_hull_points(self, kind, rng):
        for _ in range(20):
            credal, dom = random_instance(rng)
            spec = random_spec(rng, kind)
            wc = worst_case_distribution(credal, spec, dom)
            for _ in range(20):
                lam = rng.dirichlet(np.ones(len(credal)))
                P = Distribution(credal.space, lam @ credal.matrix)
                assert bayes_pair(spec, P, dom).risk <= wc.bayes_risk + 1e-9

    def test_envelope_supergradient(self, rng):
        """E_Q[loss(theta_hat(P), Z)] bounds the Bayes risk of Q from above."""
        for _ in range(100):
            credal, dom = random_instance(rng)
            spec = random_spec(rng, ["squared", "entropic"][rng.integers(2)])
            P = Distribution(credal.space, rng.dirichlet(np.ones(len(credal))) @ credal.matrix)
            bp = bayes_pair(spec, P, dom)
            theta = bp.theta_set.lo
            for g in credal.generators:
                # linear upper model of the concave Bayes risk, exact at P
                assert bayes_pair(spec, g, dom).risk <= expected_loss(spec, g, theta) + 1e-12
            assert abs(expected_loss(spec, P, theta) - bp.risk) <= 1e-10


class TestDuality:
    def test_binary_half_gap(self, binary_half):
        assert abs(duality_gap(*_args(binary_half, SQ))) <= 1e-8

    def test_singleton_gap(self, rng):
        for kind in KINDS:
            credal, dom = random_instance(rng, m_max=1)
            assert abs(duality_gap(credal, random_spec(rng, kind), dom)) <= 1e-9

    @pytest.mark.parametrize("kind", KINDS)
    def test_weak_and_strong(self, kind, rng):
        for _ in range(25):
            credal, dom = random_instance(rng)
            gap = duality_gap(credal, random_spec(rng, kind), dom)
            assert gap >= -1e-10
            assert gap <= 1e-6


class TestInclusion:
    def test_counterexample_P(self, counter_sets, dom02):
        rep = check_inclusion(counter_sets["P"], SQ, dom02)
        assert rep.holds
        assert rep.elicited.hausdorff(rep.theta_star) <= 1e-8

    def test_singleton(self, rng):
        credal, dom = random_instance(rng, m_max=1)
        rep = check_inclusion(credal, SQ, dom)
        assert rep.holds and not rep.strict

    @pytest.mark.parametrize("kind", KINDS)
    def test_random(self, kind, rng):
        for _ in range(25):
            credal, dom = random_instance(rng)
            rep = check_inclusion(credal, random_spec(rng, kind), dom, tol=1e-6)
            assert rep.violation <= 1e-6

    def test_report_serializes(self, counter_sets, dom02):
        d = check_inclusion(counter_sets["P"], SQ, dom02).to_dict()
        assert d["holds"] is True and d["theta_star"] == [[1.0, 1.0]]
        assert abs(d["elicited"][0][0] - 1.0) <= 1e-9


class TestLevelSetCorollary:
    def test_values_outside_generator_means_never_elicited(self, rng):
        """For squared loss the elicited value is a mean inside the hull."""
        for _ in range(100):
            credal, dom = random_instance(rng)
            means = credal.matrix @ credal.space.points
            f = elicit(credal, SQ, dom).argmin
            assert f.lo >= means.min() - 1e-9
            assert f.hi <= means.max() + 1e-9

    def test_worst_case_property_contains_elicited(self, rng):
        for _ in range(50):
            credal, dom = random_instance(rng)
            wc = worst_case_distribution(credal, SQ, dom)
            f = elicit(credal, SQ, dom).argmin
            assert f.excess_over(precise_property(SQ, wc.distribution)) <= 1e-6

    def test_bayes_risk_variance(self):
        assert bayes_risk(SQ, Distribution(Z3, [0.5, 0, 0.5])) == 1.0


def _args(example, spec):
    credal, dom = example
    return credal, spec, dom
