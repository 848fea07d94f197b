#!/usr/bin/env python3
"""Tests for transition systems, sofic presentations and their graph analysis."""

from fractions import Fraction
from itertools import product
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import CapabilityError, DomainError
from subshifts import SoficModel, TransitionSystem, enumerate_cycles, wielandt_bound

PERIOD3 = [[1 if t % 3 == (s + 1) % 3 else 0 for t in range(6)] for s in range(6)]

matrices = st.integers(2, 4).flatmap(
    lambda k: st.lists(
        st.lists(st.integers(0, 1), min_size=k, max_size=k), min_size=k, max_size=k
    )
)


def brute_bridges(model, u, v, gap):
    return sorted(
        w for w in product(range(model.n), repeat=gap) if model.admissible(u + w + v)
    )


class TestTransitionSystem:
    """Construction and word-level queries."""

    def test_rejects_non_square(self):
        with pytest.raises(DomainError, match="square"):
            TransitionSystem([[1, 1]])

    def test_rejects_non_binary(self):
        with pytest.raises(DomainError, match="0 or 1"):
            TransitionSystem([[2]])

    def test_rejects_dead_matrix(self):
        with pytest.raises(DomainError, match="no infinite path"):
            TransitionSystem([[0, 1], [0, 0]])

    def test_inessential_symbols_are_dropped(self):
        ts = TransitionSystem([[1, 1], [0, 0]])
        assert ts.essential_list == [0]
        assert not ts.admissible((0, 1))
        assert ts.extensions(()) == [0]

    def test_golden_mean_words(self, golden_mean):
        assert golden_mean.words(3) == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]
        assert not golden_mean.admissible((0, 1, 1))
        assert golden_mean.cyclic_admissible((0, 1))
        assert not golden_mean.cyclic_admissible((1,))

    def test_check_word(self, golden_mean):
        with pytest.raises(DomainError, match="not admissible"):
            golden_mean.check_word((1, 1))

    def test_bridge_golden_mean(self, golden_mean):
        assert golden_mean.bridge((1,), (1,), 0) is None
        assert golden_mean.bridge((1,), (1,), 1) == (0,)
        assert golden_mean.bridge((0,), (0,), 0) == ()

    def test_bridge_errors(self, golden_mean):
        with pytest.raises(DomainError):
            golden_mean.bridge((0,), (0,), -1)
        with pytest.raises(DomainError):
            golden_mean.bridge((1, 1), (0,), 2)

    @given(matrix=matrices, gap=st.integers(0, 4), data=st.data())
    @settings(max_examples=60, deadline=None)
    def test_bridge_is_complete_and_least(self, matrix, gap, data):
        try:
            ts = TransitionSystem(matrix)
        except DomainError:
            return
        u = (data.draw(st.sampled_from(ts.essential_list)),)
        v = (data.draw(st.sampled_from(ts.essential_list)),)
        expected = brute_bridges(ts, u, v, gap)
        found = ts.bridge(u, v, gap)
        if not expected:
            assert found is None
        else:
            assert found == expected[0]

    def test_words_are_lexicographic(self, full2):
        assert full2.words(2) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert full2.words(0) == [()]


class TestGraphAnalysis:
    """Primitivity, period and cyclic classes."""

    def test_primitivity_index(self, full2, golden_mean, two_cycle):
        assert full2.primitivity_index() == 1
        assert golden_mean.primitivity_index() == 2
        assert two_cycle.primitivity_index() is None

    def test_wielandt_bound(self):
        assert wielandt_bound(1) == 1
        assert wielandt_bound(4) == 10

    @given(matrix=matrices)
    @settings(max_examples=60, deadline=None)
    def test_primitivity_against_matrix_powers(self, matrix):
        try:
            ts = TransitionSystem(matrix)
        except DomainError:
            return
        a = ts.essential_matrix
        index = ts.primitivity_index()
        power = np.eye(len(a), dtype=np.int64)
        first = None
        for exponent in range(1, wielandt_bound(len(a)) + 1):
            power = ((power @ a) > 0).astype(np.int64)
            if power.all():
                first = exponent
                break
        assert index == first
        assert ts.is_mixing() == (first is not None)

    def test_period_two_cycle(self, two_cycle):
        assert two_cycle.period() == 2
        assert two_cycle.cyclic_classes().as_lists() == [[0], [1]]
        assert not two_cycle.is_mixing()

    def test_period_three(self):
        ts = TransitionSystem(PERIOD3)
        assert ts.is_transitive()
        assert ts.period() == 3
        decomposition = ts.cyclic_classes()
        assert sorted(decomposition.as_lists()) == [[0, 3], [1, 4], [2, 5]]
        assert decomposition.class_of(4) == decomposition.class_of(1)
        assert ts.class_power_primitive(decomposition)

    @given(matrix=matrices)
    @settings(max_examples=40, deadline=None)
    def test_period_is_gcd_of_cycle_lengths(self, matrix):
        try:
            ts = TransitionSystem(matrix)
        except DomainError:
            return
        if not ts.is_transitive():
            with pytest.raises(DomainError):
                ts.period()
            return
        d = 0
        for cycle in enumerate_cycles(ts, len(ts.essential)):
            d = gcd(d, len(cycle))
        assert ts.period() == d

    @pytest.mark.parametrize("seed", range(50))
    def test_generated_strongly_connected_systems(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(1, 5))
        k = p * int(rng.integers(1, 8 // p + 1))
        if k == 1:
            k = 2
        order = rng.permutation(k)
        layer = {int(s): i % p for i, s in enumerate(order)}
        matrix = np.zeros((k, k), dtype=np.int64)
        for i in range(k):
            matrix[order[i], order[(i + 1) % k]] = 1
        for s, t in product(range(k), repeat=2):
            if layer[t] == (layer[s] + 1) % p and rng.random() < 0.3:
                matrix[s, t] = 1
        ts = TransitionSystem(matrix.tolist())
        assert ts.is_transitive()

        d = 0
        for cycle in enumerate_cycles(ts, k):
            d = gcd(d, len(cycle))
        decomposition = ts.cyclic_classes()
        assert decomposition.period == ts.period() == d
        members = [s for c in decomposition.classes for s in c]
        assert sorted(members) == list(range(k))
        assert all(decomposition.classes)
        for s, t in zip(*np.nonzero(matrix)):
            assert decomposition.class_of(int(t)) == (decomposition.class_of(int(s)) + 1) % d
        assert ts.class_power_primitive(decomposition)

    def test_not_transitive(self):
        ts = TransitionSystem([[1, 1], [0, 1]])
        assert not ts.is_transitive()
        with pytest.raises(DomainError, match="not transitive"):
            ts.cyclic_classes()

    def test_graph_nodes_are_plain_ints(self):
        ts = TransitionSystem(PERIOD3)
        assert all(type(s) is int for s in ts.graph.successors(0))
        for members in ts.cyclic_classes().as_lists():
            assert all(type(s) is int for s in members)

    def test_unknown_symbol_class(self, two_cycle):
        with pytest.raises(DomainError):
            two_cycle.cyclic_classes().class_of(7)


class TestSpecification:
    """Specification constants."""

    def test_full_shift(self, full2):
        assert full2.specification_constant(Fraction(1, 8)) == 4

    def test_golden_mean(self, golden_mean):
        assert golden_mean.specification_constant(Fraction(1, 4)) == 4

    def test_needs_mixing(self, two_cycle):
        with pytest.raises(CapabilityError):
            two_cycle.specification_constant(Fraction(1, 4))


class TestSoficModel:
    """Labeled-graph presentations."""

    # even shift: blocks of 1s between 0s have even length
    EVEN = [("a", "a", 0), ("a", "b", 1), ("b", "a", 1)]

    def test_even_shift_words(self):
        model = SoficModel(self.EVEN)
        assert model.n == 2
        assert model.admissible((0, 1, 1, 0))
        assert not model.admissible((0, 1, 0))
        assert model.cyclic_admissible((0, 1, 1))
        assert not model.cyclic_admissible((0, 1))

    def test_bridge(self):
        model = SoficModel(self.EVEN)
        word = model.bridge((0, 1), (0,), 1)
        assert word == (1,)
        assert model.bridge((0, 1), (0,), 0) is None

    def test_specification(self):
        model = SoficModel(self.EVEN)
        assert model.is_mixing()
        assert model.specification_constant(Fraction(1, 4)) == 2 + model.primitivity_index()

    def test_no_edges(self):
        with pytest.raises(DomainError):
            SoficModel([])

    def test_stranded_vertices_removed(self):
        with pytest.raises(DomainError):
            SoficModel([("a", "b", 0)])
