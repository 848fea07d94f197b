#!/usr/bin/env python3
"""Tests for invariant measures, the truncated weak* distance and convex sets."""

from fractions import Fraction

import pytest

from errors import BudgetError, DomainError, InvariantError
from measures import (
    ConvexMeasure,
    DenseSequence,
    MeasureChain,
    Polygon,
    Segment,
    as_convex_set,
    chain_along,
    chain_between,
    convex,
    dense_sequence_on,
    empirical,
    flatten_periodic,
    measure_distance_bound,
    parse_measure,
    periodic,
    periodic_approximation,
    periodic_measure_convergence,
    shortest_bridge,
    support,
    weak_star_distance,
)
from streams import BlockStream
from symbolic import CylinderObservable, Observable, ShiftMetric

HALF = Fraction(1, 2)


@pytest.fixture
def p0():
    return periodic("0", 2)


@pytest.fixture
def p1():
    return periodic("1", 2)


class TestPeriodicMeasure:
    """Uniform measures on periodic orbits."""

    def test_cylinders(self):
        mu = periodic("011", 2)
        assert mu.cylinder((1,)) == Fraction(2, 3)
        assert mu.cylinder((1, 1)) == Fraction(1, 3)
        assert mu.cylinder((0, 0)) == 0
        assert mu.cylinder(()) == 1

    def test_rotation_and_power_invariance(self):
        assert periodic("0110", 2) == periodic("1001", 2)
        assert periodic("0101", 2) == periodic("01", 2)
        assert periodic("0101", 2).canonical == (0, 1)
        assert hash(periodic("10", 2)) == hash(periodic("01", 2))

    def test_fixed_point(self):
        assert periodic("00", 2).is_fixed_point
        assert not periodic("01", 2).is_fixed_point

    def test_empty_word(self):
        with pytest.raises(DomainError):
            periodic((), 2)

    def test_integrate(self):
        mu = periodic("011", 2)
        phi = Observable(((Fraction(3), CylinderObservable((1, 1))), (Fraction(-1), CylinderObservable((0,)))))
        assert mu.integrate(phi) == Fraction(2, 3)

    def test_support(self):
        assert support(periodic("01", 2), 2) == {(0, 1), (1, 0)}
        with pytest.raises(DomainError):
            support(periodic("01", 2), 0)


class TestConvexAndParsing:
    """Convex combinations and measure literals."""

    def test_single_full_term_is_unwrapped(self, p0):
        assert convex([(Fraction(1), p0)]) is p0

    def test_weights_must_sum_to_one(self, p0, p1):
        with pytest.raises(DomainError, match="sum to"):
            ConvexMeasure(((HALF, p0), (Fraction(1, 3), p1)))

    def test_negative_weight(self, p0, p1):
        with pytest.raises(DomainError):
            ConvexMeasure(((Fraction(3, 2), p0), (-HALF, p1)))

    def test_mixed_alphabets(self, p0):
        with pytest.raises(DomainError):
            ConvexMeasure(((HALF, p0), (HALF, periodic("2", 3))))

    def test_parse_nested(self):
        mu = parse_measure(
            {"convex": [["1/2", {"periodic": "0"}], ["1/2", {"periodic": "01"}]]}, 2
        )
        assert mu.cylinder((0,)) == Fraction(3, 4)
        assert mu.cylinder((0, 0)) == HALF

    @pytest.mark.parametrize(
        "spec", [{"dirac": "0"}, {"periodic": "0", "convex": []}, "01", {"convex": [["x", {"periodic": "0"}]]}]
    )
    def test_parse_errors(self, spec):
        with pytest.raises(DomainError):
            parse_measure(spec, 2)


class TestWeakStarDistance:
    """Truncated distance over the length-lexicographic cylinder family."""

    def test_fixed_points(self, p0, p1):
        assert weak_star_distance(p0, p1, 2) == (Fraction(3, 4), Fraction(1, 4))

    def test_zero_for_equal_measures(self):
        value, error = weak_star_distance(periodic("011", 2), periodic("101", 2), 10)
        assert value == 0
        assert error == Fraction(1, 1024)

    def test_symmetric(self, p0):
        mu = periodic("0111", 2)
        assert weak_star_distance(mu, p0, 12) == weak_star_distance(p0, mu, 12)

    def test_alphabet_mismatch(self, p0):
        with pytest.raises(DomainError):
            weak_star_distance(p0, periodic("0", 3), 4)

    def test_segment_distance_is_linear(self, p0, p1):
        segment = Segment(p0, p1)
        d, _ = weak_star_distance(p0, p1, 8)
        a, b = segment.point(Fraction(1, 3)), segment.point(Fraction(3, 4))
        assert weak_star_distance(a, b, 8)[0] == Fraction(5, 12) * d


class TestEmpiricalMeasures:
    """Empirical measures along periodic streams."""

    def test_counts(self):
        x = BlockStream.periodic((0, 1), 2)
        mu = empirical(x, 4, 4)
        assert mu.cylinder((0,)) == HALF
        assert mu.cylinder((0, 1)) == HALF
        assert mu.cylinder_at((1,), 2) == HALF

    def test_invalid(self):
        x = BlockStream.periodic((0, 1), 2)
        with pytest.raises(DomainError):
            empirical(x, 0, 4)

    @pytest.mark.parametrize("phase", [0, 1, 2])
    def test_convergence_bound(self, phase):
        word = (0, 1, 1)
        x = BlockStream.periodic(word, 2, phase=phase)
        bound = periodic_measure_convergence(word)
        for n in range(1, 40):
            value, _ = weak_star_distance(empirical(x, n, 8), periodic(word, 2), 8)
            assert value <= bound(n)

    def test_convergence_thresholds(self):
        bound = periodic_measure_convergence((0, 1))
        assert bound(10) == Fraction(2, 5)
        assert bound.threshold(Fraction(1, 5)) == 20
        assert periodic_measure_convergence((1, 1)).threshold(Fraction(1, 100)) == 1
        assert periodic_measure_convergence((1,))(7) == 0
        with pytest.raises(DomainError):
            bound(0)
        with pytest.raises(DomainError):
            periodic_measure_convergence(())

    def test_distance_bound_for_equal_streams(self):
        x = BlockStream.periodic((0, 1), 2)
        bound, delta = measure_distance_bound(x, x, 100, Fraction(1, 4), ShiftMetric.geometric(2))
        assert delta == 0
        assert bound == Fraction(1, 64)


class TestConvexSets:
    """Segments and polygons."""

    def test_segment_parameters(self, p0, p1):
        segment = Segment(p0, p1)
        assert segment.at(0) is p0
        assert segment.at(1) is p1
        middle = segment.point(Fraction(1, 3))
        assert middle.cylinder((0,)) == Fraction(1, 3)
        assert segment.locate(middle) == Fraction(1, 3)
        assert segment.locate(p1) == 0
        assert segment.locate(periodic("01", 2)) is None
        with pytest.raises(DomainError):
            segment.point(Fraction(2))

    def test_degenerate_segment(self, p0):
        segment = Segment(p0, periodic("00", 2))
        assert segment.extremes == (p0,)
        assert segment.edge_count == 0
        assert segment.edge_length(8) == 0

    def test_polygon_walk(self, p0, p1):
        p01 = periodic("01", 2)
        polygon = Polygon((p0, p1, p01))
        assert polygon.edge_count == 3
        assert polygon.at(0) is p0
        assert polygon.at(Fraction(1, 3)) is p1
        assert polygon.at(1) is p0
        with pytest.raises(DomainError):
            Polygon(())

    def test_as_convex_set(self, p0, p1):
        assert isinstance(as_convex_set([p0, p1]), Segment)
        assert isinstance(as_convex_set([p0]), Polygon)
        segment = Segment(p0, p1)
        assert as_convex_set(segment) is segment


class TestChains:
    """Measure chains with bounded steps."""

    def test_chain_between_ends(self, p0, p1):
        segment = Segment(p0, p1)
        d, _ = weak_star_distance(p0, p1, 8)
        chain = chain_between(p0, p1, d / 4, segment, 8)
        assert len(chain) == 5
        assert chain.points[0] is p0
        assert chain.points[-1] is p1
        chain.verify(8)

    def test_chain_to_itself(self, p0, p1):
        chain = chain_between(p0, p0, Fraction(1, 8), Segment(p0, p1))
        assert len(chain) == 1

    def test_off_segment(self, p0, p1):
        with pytest.raises(DomainError, match="not on the declared segment"):
            chain_between(p0, periodic("01", 2), Fraction(1, 8), Segment(p0, p1))

    def test_chain_along_polygon(self, p0, p1):
        polygon = Polygon((p0, p1, periodic("01", 2)))
        chain = chain_along(polygon, 0, 1, Fraction(1, 16), 8)
        assert len(chain) >= 3
        assert chain.steps[0] == 0
        assert chain.steps[-1] == 1

    def test_verify_catches_long_steps(self, p0, p1):
        chain = MeasureChain((p0, p1), Fraction(1, 100))
        with pytest.raises(InvariantError):
            chain.verify(4)


class TestDenseSequence:
    """Dyadic boustrophedon enumeration."""

    def test_first_passes(self, p0, p1):
        sequence = DenseSequence(Segment(p0, p1), depth=8)
        d = sequence.diameter
        assert [sequence.parameter(j) for j in range(1, 8)] == [
            0, HALF, 1, Fraction(3, 4), HALF, Fraction(1, 4), 0,
        ]
        assert sequence.gap(1) == d / 2
        assert sequence.gap(3) == d / 4
        assert sequence[1] is p0

    def test_every_grid_point_recurs(self, p0, p1):
        sequence = dense_sequence_on([p0, p1], depth=8)
        later = {sequence.parameter(j) for j in range(20, 80)}
        assert {Fraction(0), HALF, Fraction(1)} <= later

    def test_envelope_forces_finer_passes(self, p0, p1):
        sequence = DenseSequence(Segment(p0, p1), envelope=lambda n: Fraction(1, 8), depth=8)
        assert sequence.gap(1) <= Fraction(1, 8)

    def test_unreachable_envelope(self, p0, p1):
        sequence = DenseSequence(Segment(p0, p1), envelope=lambda n: Fraction(0), depth=8, max_resolution=5)
        with pytest.raises(BudgetError):
            sequence.parameter(1)

    def test_trivial_set(self, p0):
        sequence = dense_sequence_on([p0])
        assert sequence.head(3) == [p0, p0, p0]

    def test_one_based(self, p0, p1):
        with pytest.raises(DomainError):
            DenseSequence(Segment(p0, p1)).parameter(0)


class TestPeriodicApproximation:
    """Cycle words approximating convex combinations."""

    def test_flatten(self, p0, p1):
        inner = convex([(HALF, p0), (HALF, p1)])
        outer = convex([(HALF, inner), (HALF, periodic("01", 2))])
        weights = {m.canonical: w for w, m in flatten_periodic(outer)}
        assert weights == {(0,): Fraction(1, 4), (1,): Fraction(1, 4), (0, 1): HALF}

    def test_shortest_bridge(self, golden_mean):
        assert shortest_bridge(golden_mean, (1,), (1,)) == (0,)
        with pytest.raises(BudgetError):
            shortest_bridge(golden_mean, (1,), (1,), limit=0)

    def test_single_periodic_term(self, full2):
        assert periodic_approximation(periodic("10", 2), Fraction(1, 8), full2) == periodic("01", 2)

    def test_within_eps(self, golden_mean, p0):
        target = convex([(HALF, p0), (HALF, periodic("01", 2))])
        eps = Fraction(1, 32)
        mu = periodic_approximation(target, eps, golden_mean, 8)
        assert weak_star_distance(mu, target, 8)[0] <= eps
        assert golden_mean.cyclic_admissible(mu.word)

    def test_empirical_is_not_approximable(self, full2):
        x = BlockStream.periodic((0, 1), 2)
        with pytest.raises(DomainError):
            periodic_approximation(empirical(x, 4, 2), Fraction(1, 8), full2)
