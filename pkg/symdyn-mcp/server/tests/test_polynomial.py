#!/usr/bin/env python3
"""Tests for the polynomial-metric construction."""

from fractions import Fraction

import pytest

from alphas import ALPHAS
from analyzer import Verdict, polynomial_report
from errors import DomainError
from polynomial import (
    polynomial_construction,
    polynomial_schedule,
    verify_polynomial_schedule,
)
from symbolic import Side


@pytest.fixture(scope="module")
def schedule():
    return polynomial_schedule(ALPHAS["sqrt"], 2)


class TestSchedule:
    """Stage times and their inequalities."""

    def test_stage_order(self, schedule):
        first, second = schedule.stages
        assert first.quiet_from == 0
        assert first.a < first.b < first.c < first.d[0]
        assert second.quiet_from == first.end
        assert second.a > first.end
        assert len(second.d) == 2
        assert schedule.last_time == second.end

    def test_ratios(self, schedule):
        for stage in schedule.stages:
            ratio = 1 - Fraction(1, 2**stage.k)
            assert Fraction(stage.b - stage.a, stage.b) > ratio
            lo, hi = stage.block(stage.k)
            assert Fraction(hi - lo + 1, hi) > ratio

    def test_verification_count(self, schedule):
        assert verify_polynomial_schedule(schedule) == 6 + 7

    def test_checkpoints(self, schedule):
        assert schedule.closeness_checkpoints() == [(s.k, s.b + 1) for s in schedule.stages]
        assert [k for k, _ in schedule.separation_checkpoints(2)] == [2]

    def test_needs_a_stage(self):
        with pytest.raises(DomainError):
            polynomial_schedule(ALPHAS["sqrt"], 0)

    def test_log_growth_required(self):
        with pytest.raises(DomainError, match="log-growth proxy"):
            polynomial_schedule(ALPHAS["log"], 1)


class TestConstruction:
    """Two-sided members."""

    def test_members(self, schedule):
        family = polynomial_construction(ALPHAS["sqrt"], ["12", "21"])
        x, y = family.member("12"), family.member("21")
        assert x.side is Side.TWO
        assert x.window(-10, 1) == (0,) * 11
        first = schedule.stages[0]
        lo, hi = first.block(1)
        assert x.realize(hi) == 0
        assert y.realize(hi) == 1
        assert x.realize(first.a) == y.realize(first.a) == 0
        assert x.realize(family.horizon + 5) == 0
        assert family.first_difference((1, 2), (2, 1)) == 1
        assert family.describe()["metric"] == "polynomial"

    def test_no_prefixes(self):
        family = polynomial_construction(ALPHAS["sqrt"], [], stages=1)
        assert family.members == {}
        assert family.pairs() == []

    def test_prefix_length(self):
        with pytest.raises(DomainError):
            polynomial_construction(ALPHAS["sqrt"], ["1"], stages=2)

    def test_horizon(self):
        with pytest.raises(DomainError, match="horizon"):
            polynomial_construction(ALPHAS["sqrt"], ["1"], stages=1, horizon=1)

    def test_unknown_member(self):
        family = polynomial_construction(ALPHAS["sqrt"], ["1"])
        with pytest.raises(DomainError):
            family.member("2")


@pytest.fixture(scope="module")
def five_stage_report():
    family = polynomial_construction(ALPHAS["sqrt"], ["11111", "22222"])
    return family, polynomial_report(family, "11111", "22222")


class TestFiveStages:
    """The sqrt family carried through five stages."""

    def test_schedule_depth(self, five_stage_report):
        family, _ = five_stage_report
        assert family.schedule.stage_count == 5
        assert verify_polynomial_schedule(family.schedule) == sum(6 + k - 1 for k in range(1, 6))

    def test_alpha_closeness_per_stage(self, five_stage_report):
        _, report = five_stage_report
        rows = [r for r in report.rows if r.kind == "alpha-closeness"]
        assert {r.stage for r in rows} == {1, 2, 3, 4, 5}
        for r in rows:
            assert r.value >= 1 - Fraction(1, 2**r.stage)

    def test_separation_per_stage(self, five_stage_report):
        _, report = five_stage_report
        rows = [r for r in report.rows if r.kind == "separation"]
        assert [r.stage for r in rows] == [1, 2, 3, 4, 5]
        for r in rows:
            assert r.value <= Fraction(2, 2**r.stage)

    def test_verdict(self, five_stage_report):
        _, report = five_stage_report
        assert report.verdict is Verdict.ALPHA_DC1
        assert all(c.holds for c in report.implications)
