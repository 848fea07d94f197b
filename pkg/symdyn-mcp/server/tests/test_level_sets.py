#!/usr/bin/env python3
"""Tests for level-set targets and the recurrence designs."""

from fractions import Fraction

import pytest

from errors import DomainError
from level_sets import (
    FULL_SUPPORT_WORD,
    banach_only_family,
    level_set_family,
    level_weight,
    periodic_pool,
    select_level_targets,
    upper_not_lower_family,
)
from measures import periodic
from symbolic import Observable

ONES = Observable.cylinder((1,))


class TestTargets:
    """Bracketing periodic measures and their weights."""

    def test_pool(self, full2, golden_mean):
        assert [mu.word for mu in periodic_pool(full2, 3)] == [(0, 1), (0, 0, 1), (0, 1, 1)]
        assert all(golden_mean.cyclic_admissible(mu.word) for mu in periodic_pool(golden_mean, 6))

    def test_level_weight(self):
        assert level_weight(Fraction(11, 20), Fraction(1, 2), Fraction(2, 3)) == Fraction(7, 10)

    def test_selection_hits_the_levels(self, full2):
        targets = select_level_targets(full2, ONES, Fraction(11, 20), Fraction(3, 5))
        assert targets.mu1 == periodic("01", 2)
        assert targets.mu2 == periodic("011", 2)
        assert targets.theta1 == Fraction(7, 10)
        assert targets.theta2 == Fraction(2, 5)
        assert targets.nu1.integrate(ONES) == Fraction(11, 20)
        assert targets.nu2.integrate(ONES) == Fraction(3, 5)
        assert targets.convex_set.locate(targets.nu1) == 1
        assert targets.describe()["phi_mu2"] == "2/3"

    def test_equal_levels(self, full2):
        targets = select_level_targets(full2, ONES, Fraction(3, 5), Fraction(3, 5))
        assert targets.nu2 is targets.nu1

    def test_reversed_levels(self, full2):
        with pytest.raises(DomainError, match="a <= b"):
            select_level_targets(full2, ONES, Fraction(3, 5), Fraction(1, 2))

    @pytest.mark.parametrize("a, b", [(Fraction(0), Fraction(1, 2)), (Fraction(1, 2), Fraction(1))])
    def test_unreachable_levels(self, full2, a, b):
        with pytest.raises(DomainError, match="outside the range"):
            select_level_targets(full2, ONES, a, b)


class TestLevelSetFamily:
    """One-stage level-set construction."""

    def test_family(self, full2):
        family, targets = level_set_family(
            full2, ONES, Fraction(11, 20), Fraction(3, 5), stages=1
        )
        assert sorted(family.members) == [(1,), (2,)]
        assert family.zeta == targets.seed.zeta == Fraction(1, 4)
        a, b = family.schedule.separation_window(1, 1)
        assert family.member("1").window(a + 1, a + 4) != family.member("2").window(a + 1, a + 4)


class TestRecurrenceDesigns:
    """Members built for prescribed return densities."""

    def test_full_support_word(self):
        word = tuple(int(ch) for ch in FULL_SUPPORT_WORD)
        windows = {tuple((word * 2)[i : i + 4]) for i in range(len(word))}
        assert len(windows) == 16

    def test_banach_only(self):
        design = banach_only_family(stages=1, dwell=8)
        assert design.kind == "banach-only"
        assert design.eps == Fraction(1, 16)
        assert design.visit_word == (0, 0, 0, 0)
        assert design.describe()["banach_target"] == "1/2"
        assert design.family.open_word == (0, 0)

    def test_upper_not_lower(self):
        design = upper_not_lower_family(stages=1)
        assert design.kind == "upper-not-lower"
        assert design.upper_target == Fraction(1, 2)
        assert design.visit_word == (0, 0, 0, 0)
        info = design.describe()
        assert info["upper_target"] == "1/2"
        assert "banach_target" not in info
        assert sorted(design.family.members) == [(1,), (2,)]
