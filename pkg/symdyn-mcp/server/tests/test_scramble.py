#!/usr/bin/env python3
"""Tests for tracing schedules, scrambled families and backward tracing."""

import random
from fractions import Fraction

import pytest

from alphas import ALPHAS
from analyzer import Verdict, dc1_verdict
from distal import make_seed
from errors import CapabilityError, DomainError
from measures import Segment, periodic
from pair_engine import agree_on, pair_engine
from scramble import (
    SlotKind,
    backward_trace,
    build_schedule,
    construct_family,
    default_epsilon,
    fixed_point_exclusion,
    normalize_prefix,
    saturation_target,
    verify_admissible,
    verify_schedule,
    verify_tracing,
)
from streams import BlockStream, BlockStreamBuilder
from subshifts import SoficModel, TransitionSystem
from symbolic import Side, distance, m_epsilon, shift

PREFIXES = ["11", "12", "21", "22"]


@pytest.fixture(scope="module")
def seed():
    return make_seed(periodic("01", 2), periodic("011", 2))


@pytest.fixture(scope="module")
def target(seed):
    return saturation_target(Segment(seed.measure, periodic("011", 2)), seed, depth=8)


@pytest.fixture(scope="module")
def schedule(seed, target):
    return build_schedule(TransitionSystem.full(2), seed, target, 2, rng_seed=7, depth=8)


@pytest.fixture(scope="module")
def family(schedule):
    return construct_family(schedule, PREFIXES)


class TestSaturationTarget:
    """K and the seed parameter."""

    def test_seed_parameter(self, target):
        assert target.distal_parameter == 0
        assert target.describe()["edges"] == 1

    def test_seed_outside_k(self, seed):
        with pytest.raises(DomainError, match="not a declared point of K"):
            saturation_target(Segment(periodic("011", 2), periodic("0011", 2)), seed)


class TestDefaultEpsilon:
    """Base tracing budget."""

    def test_capped_by_zeta(self, seed, full2):
        assert default_epsilon(full2, (), seed) == Fraction(1, 8)

    def test_scaled_by_open_word(self, seed, full2):
        assert default_epsilon(full2, (0, 0), seed) == Fraction(1, 32)


class TestSchedule:
    """Greedy slot layout."""

    def test_stage_parameters(self, schedule):
        first, second = schedule.stage(1), schedule.stage(2)
        assert first.eps == Fraction(1, 16)
        assert second.eps == Fraction(1, 32)
        assert second.delta == Fraction(1, 4)
        assert first.trace_depth == 4
        assert first.gap == 5
        assert second.word_length == 5

    def test_stage_out_of_range(self, schedule):
        with pytest.raises(DomainError):
            schedule.stage(3)

    def test_verification_counts(self, schedule):
        checks = verify_schedule(schedule)
        assert checks["stages"] == 2
        assert checks["dense_words"] == 16 + 32
        assert checks["gaps"] == len(schedule.slots) - 1

    def test_slots_are_ordered(self, schedule):
        for before, after in zip(schedule.slots, schedule.slots[1:]):
            assert before.a <= before.b < after.a
        assert schedule.slots[0].a == 0

    def test_distal_slot_per_group(self, schedule):
        distal = [s for s in schedule.slots if s.kind is SlotKind.DISTAL]
        assert [(s.stage, s.group) for s in distal] == [(1, 1), (2, 1), (2, 2)]

    def test_checkpoints(self, schedule):
        table = schedule.checkpoint_table()
        assert len(table) == 3 + 5
        a, b = schedule.separation_window(2, 2)
        assert a < b
        assert schedule.closeness_checkpoint(2) < a
        time, measure = schedule.tracking_checkpoint(2, 2)
        assert measure.cylinder((1,)) == Fraction(7, 12)
        assert schedule.birkhoff_grid() == sorted(schedule.birkhoff_grid())
        with pytest.raises(DomainError):
            schedule.separation_window(3, 2)

    def test_prescribed_measure(self, schedule, seed):
        assert schedule.prescribed_measure(0) is None
        a, _ = schedule.separation_window(1, 1)
        measure, tolerance = schedule.prescribed_measure(a)
        assert measure is seed.measure
        assert tolerance == 5 * Fraction(1, 16) + 2 * Fraction(1, 2)

    def test_needs_a_stage(self, seed, target, full2):
        with pytest.raises(DomainError):
            build_schedule(full2, seed, target, 0)

    def test_needs_mixing_transition_system(self, seed, target, two_cycle):
        with pytest.raises(CapabilityError):
            build_schedule(two_cycle, seed, target, 1)
        sofic = SoficModel([("a", "a", 0), ("a", "a", 1)])
        with pytest.raises(CapabilityError):
            build_schedule(sofic, seed, target, 1)

    def test_eps_below_open_radius(self, seed, target, full2):
        with pytest.raises(DomainError, match="open-target radius"):
            build_schedule(full2, seed, target, 1, open_word=(0, 1), eps=Fraction(1, 4))

    def test_open_word_comes_first(self, seed, target, full2):
        schedule = build_schedule(full2, seed, target, 1, open_word=(1, 1), depth=8)
        first = schedule.slots[0]
        assert first.kind is SlotKind.TARGET
        assert first.word[:2] == (1, 1)
        assert verify_schedule(schedule)["stages"] == 1

    def test_alpha_checkpoint(self, seed, target, full2):
        schedule = build_schedule(full2, seed, target, 1, alpha=ALPHAS["sqrt"], depth=8)
        assert schedule.alpha_checkpoint(1) is not None
        assert verify_schedule(schedule)["alpha"] == 1
        stage = schedule.stage(1)
        assert stage.eta < stage.eps


class TestFamily:
    """Members built from a two-stage schedule."""

    def test_members(self, family):
        assert len(family.members) == 4
        assert len(family.pairs()) == 6
        assert family.t0() == Fraction(3, 16)
        assert family.describe()["members"] == PREFIXES

    def test_normalize_prefix(self):
        assert normalize_prefix("121", 3) == (1, 2, 1)
        with pytest.raises(DomainError):
            normalize_prefix("13", 2)
        with pytest.raises(DomainError):
            normalize_prefix("1", 2)

    def test_unknown_member(self, schedule):
        family = construct_family(schedule, ["11"], verify=False)
        with pytest.raises(DomainError, match="was not constructed"):
            family.member("22")

    def test_members_share_history_until_they_split(self, family):
        u, v = (1, 1), (1, 2)
        assert family.first_difference(u, v) == 2
        shared = family.shared_until(u, v)
        assert agree_on(family.member(u), family.member(v), 1, shared)
        assert not agree_on(family.member(u), family.member(v), 1, family.horizon)

    def test_distal_window_separates(self, family, schedule):
        a, b = schedule.separation_window(1, 1)
        x, y = family.member("11"), family.member("21")
        engine = pair_engine(x, y, schedule.model.metric, b + 1)
        t0 = family.t0()
        assert engine.close_count(t0, b + 1) - engine.close_count(t0, a) == 0

    def test_verification(self, family, schedule):
        assert verify_tracing(family) == 4 * len(schedule.slots)
        verify_admissible(schedule.model, family.member("12"), 1, family.horizon)

    def test_horizon_too_short(self, schedule):
        with pytest.raises(DomainError, match="horizon"):
            construct_family(schedule, ["11"], horizon=schedule.last_time - 1)


class TestBackwardTrace:
    """Two-sided extension onto a reference stream."""

    def test_joins_onto_z(self, family):
        z = BlockStream.periodic((0,), 2, Side.TWO)
        extended = backward_trace(family, z, Fraction(1))
        x = extended.member("12")
        assert x.side is Side.TWO
        assert x.window(-20, 0) == z.window(-20, 0)
        assert x.window(1, 200) == family.member("12").window(1, 200)
        assert all(total <= 1 for total in extended.tail_sums.values())
        assert "tail_sums" in extended.describe()

    def test_reports_least_feasible_eps(self, family):
        z = BlockStream.periodic((0,), 2, Side.TWO)
        with pytest.raises(DomainError, match="least feasible eps"):
            backward_trace(family, z, Fraction(1, 2**100))

    def test_needs_two_sided_z(self, family):
        with pytest.raises(DomainError):
            backward_trace(family, BlockStream.periodic((0,), 2), Fraction(1))


class TestFixedPointExclusion:
    """Pairs asymptotic to a fixed point stay close."""

    def test_fractions_near_one(self, full2):
        pairs = fixed_point_exclusion(full2, pairs=3, horizon=400)
        assert len(pairs) == 3
        for pair in pairs:
            assert all(value >= Fraction(9, 10) for value in pair.fractions.values())

    def test_short_horizon(self, full2):
        with pytest.raises(DomainError):
            fixed_point_exclusion(full2, horizon=100)

    def test_symbol_must_be_a_fixed_point(self, golden_mean):
        with pytest.raises(DomainError, match="not a point"):
            fixed_point_exclusion(golden_mean, symbol=1)

    def test_twenty_pairs_are_refuted(self, full2):
        pairs = fixed_point_exclusion(full2, pairs=20, horizon=10**4, rng_seed=3)
        grid = [Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)]
        for k, pair in enumerate(pairs):
            assert all(value >= Fraction(99, 100) for value in pair.fractions.values())
            report = dc1_verdict(pair.x, pair.y, grid[0], grid, [], [], 10**4, pair=f"p{k}")
            assert report.verdict is Verdict.REFUTED


class TestExponentialUpgrade:
    """Agreement on [a + 1, b + m_eps] gives eps n^-min(i - a, b - i) on the whole segment."""

    def test_random_segments(self):
        rng = random.Random(11)
        models = [TransitionSystem.full(2), TransitionSystem.golden_mean(), TransitionSystem.full(3)]
        for _ in range(200):
            model = rng.choice(models)
            n = model.n
            eps = Fraction(1, rng.choice([2, 3, 5, 8, 13, 40]))
            m = m_epsilon(model.metric, eps)
            a = rng.randint(0, 12)
            b = a + rng.randint(0, 24)
            word: tuple = ()
            while len(word) < b + m + 10:
                word += (rng.choice(model.extensions(word)),)
            # the tracer copies the source on the window and is arbitrary elsewhere
            other = tuple(
                s if a + 1 <= j <= b + m else rng.randrange(n) for j, s in enumerate(word, start=1)
            )
            x = BlockStreamBuilder(n).append_word(word).append_periodic((0,), 1).build()
            y = BlockStreamBuilder(n).append_word(other).append_periodic((0,), 1).build()
            assert a == b + m or agree_on(x, y, a + 1, b + m)
            guard = b + m + 20
            for i in range(a, b + 1):
                d = distance(shift(x, i), shift(y, i), model.metric, guard).value
                assert d < eps / Fraction(n) ** min(i - a, b - i)
