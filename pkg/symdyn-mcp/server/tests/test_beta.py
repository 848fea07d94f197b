#!/usr/bin/env python3
"""Tests for beta-shifts."""

import random
from fractions import Fraction
from itertools import product

import mpmath
import pytest

from beta import BetaModel, DigitSequence, expansion_residual, nested_beta_family, parse_beta
from errors import CapabilityError, DomainError, PrecisionError

GOLDEN = "(1 + sqrt(5))/2"


@pytest.fixture
def golden():
    return BetaModel(GOLDEN)


class TestParse:
    """Parameter parsing."""

    def test_decimal_is_exact(self):
        assert parse_beta("2.5") == parse_beta("5/2")

    def test_must_exceed_one(self):
        with pytest.raises(DomainError):
            parse_beta("1")
        with pytest.raises(DomainError):
            BetaModel("0.5")


class TestExpansionOfOne:
    """Greedy and quasi-greedy expansions of 1."""

    def test_golden_mean(self, golden):
        assert golden.greedy_one[0] == (1, 1)
        assert golden.quasi_greedy == DigitSequence((), (1, 0))
        assert golden.n == 2
        assert golden.b == 1

    def test_integer_beta_is_a_full_shift(self):
        model = BetaModel("3")
        assert model.n == 3
        assert all(model.admissible(w) for w in model.words(3))

    def test_digit_sequence_past_prefix(self):
        seq = DigitSequence((1, 0, 1))
        assert seq.head(3) == (1, 0, 1)
        assert not seq.exact
        with pytest.raises(PrecisionError):
            seq.digit(4)
        with pytest.raises(CapabilityError):
            seq.max_zero_run()

    def test_zero_run(self):
        assert DigitSequence((2,), (1, 0, 0)).max_zero_run() == 2


class TestGoldenShift:
    """The golden-mean beta-shift forbids 11."""

    def test_admissible(self, golden):
        assert golden.admissible((1, 0, 1, 0, 0))
        assert not golden.admissible((0, 1, 1))
        assert golden.cyclic_admissible((1, 0))
        assert not golden.cyclic_admissible((1,))

    def test_bridge(self, golden):
        assert golden.bridge((1,), (1,), 1) == (0,)
        assert golden.bridge((1,), (1,), 0) is None

    def test_specification_constant(self, golden):
        assert golden.specification_constant(Fraction(1, 4)) == 4


class TestExpand:
    """Greedy digits of field elements."""

    def test_exact_boundary_hit(self, golden):
        assert golden.expand("beta - 1", 4) == (1, 0, 0, 0)

    @pytest.mark.parametrize("x", [Fraction(1, 2), Fraction(1, 3), Fraction(0)])
    def test_residual_bound(self, golden, x):
        depth = 24
        digits = golden.expand(x, depth)
        assert golden.admissible(digits)
        residual = expansion_residual(golden, x, digits)
        with mpmath.workdps(60):
            beta = mpmath.mpf(golden.numeric(50))
            assert residual >= -mpmath.mpf(10) ** -40
            assert residual < beta ** (-depth)

    def test_out_of_range(self, golden):
        with pytest.raises(DomainError):
            golden.expand(Fraction(3, 2), 4)
        with pytest.raises(DomainError):
            golden.expand(Fraction(1, 2), -1)

    def test_non_polynomial(self, golden):
        with pytest.raises(DomainError):
            golden.element("1/beta")


class TestNestedFamily:
    """Specification parameters below beta."""

    def test_increasing_and_nested(self, golden):
        family = nested_beta_family(golden, 2, max_period=8, check_depth=8)
        assert len(family) == 2
        values = [float(m.numeric(20)) for m in family]
        assert values[0] < values[1] < float(golden.numeric(20))
        for model in family:
            for word in model.words(6):
                assert golden.admissible(word)

    def test_empty(self, golden):
        assert nested_beta_family(golden, 0) == []
        with pytest.raises(DomainError):
            nested_beta_family(golden, -1)


class TestGoldenShiftAgreement:
    """The golden beta-shift is the golden-mean transition system."""

    def test_admissibility_matches_transition_system(self, golden, golden_mean):
        for length in range(15):
            for word in product((0, 1), repeat=length):
                assert golden.admissible(word) == golden_mean.admissible(word)

    def test_random_rationals_at_depth_40(self, golden):
        rng = random.Random(0)
        depth = 40
        with mpmath.workdps(60):
            bound = mpmath.mpf(golden.numeric(50)) ** (-depth)
        for _ in range(1000):
            q = rng.randint(1, 10**6)
            x = Fraction(rng.randrange(q), q)
            residual = expansion_residual(golden, x, golden.expand(x, depth))
            with mpmath.workdps(60):
                assert -mpmath.mpf(10) ** -40 <= residual < bound

    def test_nested_family_to_depth_12(self, golden):
        family = nested_beta_family(golden, 2, max_period=8, check_depth=12)
        for model in family:
            assert all(golden.admissible(word) for word in model.words(12))
