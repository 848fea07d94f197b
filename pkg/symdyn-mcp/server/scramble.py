"""Tracing schedules, scrambled families and backward tracing.

A schedule lays out, stage by stage, the slots a family member must trace: the
open-target word, every admissible word of the stage length (dense slots), a chain
of periodic points running from the distal measure to a dense point of K and back
(chain slots), and one distal block whose row is chosen by the member's symbol
(distal slots). Slots are separated by the specification gap of their stage.

Tracing here is exact copying: the slot [a, b] copies coordinates 1 .. b - a + M of
its source into positions a + 1 .. b + M of the member, so d(sigma^i x, sigma^(i-a) y)
stays below n^-M for every i in [a, b]. Later stages never rewrite earlier positions,
so the finite members are prefixes of their limits.
"""

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from mcp.server.fastmcp.utilities.logging import get_logger

from alphas import AlphaFunction
from distal import DistalBlocks, DistalMode, DistalSeed, distal_blocks
from errors import BudgetError, CapabilityError, DomainError, InvariantError
from measures import (
    ConvexSet,
    DenseSequence,
    FiniteMeasure,
    Polygon,
    Segment,
    chain_along,
    periodic_approximation,
    periodic_measure_convergence,
    shortest_bridge,
)
from pair_engine import agree_on, pair_engine
from settings import get_settings
from streams import BlockStream, BlockStreamBuilder, Piece, copy_extender
from subshifts import ShiftModel, TransitionSystem
from symbolic import Side, Word, format_word, m_epsilon

logger = get_logger(__name__)

Prefix = Tuple[int, ...]


# saturation targets ---------------------------------------------------------


@dataclass
class SaturationTarget:
    """The set K, its dense sequence and the parameter of the seed measure in K."""

    convex_set: ConvexSet
    dense: DenseSequence
    distal_parameter: Fraction

    def describe(self) -> dict:
        return {
            "extremes": [m.describe() for m in self.convex_set.extremes],
            "edges": self.convex_set.edge_count,
            "distal_parameter": str(self.distal_parameter),
        }


def _locate(convex_set: ConvexSet, measure: FiniteMeasure) -> Optional[Fraction]:
    if isinstance(convex_set, Segment):
        theta = convex_set.locate(measure)
        if theta is None:
            return None
        return Fraction(0) if convex_set.edge_count == 0 else 1 - theta
    if isinstance(convex_set, Polygon):
        edges = convex_set.edge_count
        for j, vertex in enumerate(convex_set.vertices):
            if vertex is measure or vertex == measure:
                return Fraction(j, edges) if edges else Fraction(0)
    return None


def saturation_target(
    convex_set: ConvexSet,
    seed: DistalSeed,
    envelope=None,
    depth: Optional[int] = None,
) -> SaturationTarget:
    """
    Pair K with its dense sequence.

    Raises:
        DomainError: if the seed measure is not a declared point of K
    """
    s = _locate(convex_set, seed.measure)
    if s is None:
        raise DomainError("the seed measure is not a declared point of K")
    return SaturationTarget(convex_set, DenseSequence(convex_set, envelope, depth), s)


# schedules --------------------------------------------------------------------


class SlotKind(str, Enum):
    TARGET = "target"
    DENSE = "dense"
    CHAIN = "chain"
    DISTAL = "distal"


@dataclass(frozen=True)
class StageParams:
    stage: int
    eps: Fraction
    delta: Fraction
    eta: Fraction
    trace_depth: int
    gap: int
    word_length: int
    distal: DistalBlocks

    def describe(self) -> dict:
        return {
            "stage": self.stage,
            "eps": str(self.eps),
            "delta": str(self.delta),
            "eta": str(self.eta),
            "trace_depth": self.trace_depth,
            "gap": self.gap,
            "word_length": self.word_length,
            "distal": self.distal.describe(),
        }


@dataclass(frozen=True)
class Slot:
    """One traced segment [a, b]; `word` is the cycle traced (distal slots pick a row instead)."""

    kind: SlotKind
    stage: int
    group: int
    index: int
    a: int
    b: int
    threshold: int
    word: Optional[Word] = None
    parameter: Optional[Fraction] = None
    turn: bool = False

    @property
    def measured(self) -> bool:
        return self.kind in (SlotKind.CHAIN, SlotKind.DISTAL)

    def describe(self, n: int) -> dict:
        out = {
            "kind": self.kind.value,
            "stage": self.stage,
            "group": self.group,
            "index": self.index,
            "a": str(self.a),
            "b": str(self.b),
            "threshold": self.threshold,
        }
        if self.word is not None:
            out["cycle_length"] = len(self.word)
            if len(self.word) <= 64:
                out["word"] = format_word(self.word, n)
        if self.parameter is not None:
            out["parameter"] = str(self.parameter)
        if self.turn:
            out["turn"] = True
        return out


@dataclass(frozen=True)
class TraceSchedule:
    model: ShiftModel
    seed: DistalSeed
    target: SaturationTarget
    alpha: Optional[AlphaFunction]
    open_word: Word
    eps: Fraction
    delta: Fraction
    dwell: int
    stages: Tuple[StageParams, ...]
    slots: Tuple[Slot, ...]
    alpha_times: Dict[int, int] = field(default_factory=dict)

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    def stage(self, k: int) -> StageParams:
        if not 1 <= k <= len(self.stages):
            raise DomainError(f"stage {k} outside 1..{len(self.stages)}")
        return self.stages[k - 1]

    @property
    def last_time(self) -> int:
        return self.slots[-1].b

    @property
    def horizon(self) -> int:
        """Last position fixed by a traced copy."""
        last = self.slots[-1]
        return last.b + self.stage(last.stage).trace_depth

    def slots_in(self, k: int) -> List[Slot]:
        return [s for s in self.slots if s.stage == k]

    def _turn(self, group: int, k: int) -> Slot:
        for slot in self.slots:
            if slot.stage == k and slot.group == group and slot.turn:
                return slot
        raise DomainError(f"no chain turn for group {group} at stage {k}")

    def closeness_checkpoint(self, k: int) -> int:
        """b of the first group's turning chain slot: members share everything since the last distal slot."""
        return self._turn(1, k).b

    def separation_window(self, group: int, k: int) -> Tuple[int, int]:
        if not 1 <= group <= k:
            raise DomainError("distal groups of stage k run over 1..k")
        for slot in self.slots:
            if slot.kind is SlotKind.DISTAL and slot.stage == k and slot.group == group:
                return slot.a, slot.b
        raise DomainError(f"no distal slot for group {group} at stage {k}")

    def tracking_checkpoint(self, group: int, k: int) -> Tuple[int, FiniteMeasure]:
        """(b, alpha_group): the empirical measure at b tracks the dense point alpha_group."""
        slot = self._turn(group, k)
        return slot.b, self.target.dense[group]

    def alpha_checkpoint(self, k: int) -> Optional[int]:
        return self.alpha_times.get(k)

    def source(self, slot: Slot, prefix: Optional[Prefix] = None) -> BlockStream:
        if slot.kind is SlotKind.DISTAL:
            if prefix is None:
                raise DomainError("distal slots need the member prefix")
            return self.stage(slot.stage).distal.stream(prefix[slot.group - 1])
        return BlockStream.periodic(slot.word, self.model.n)

    def slot_measure(self, slot: Slot) -> Optional[FiniteMeasure]:
        if slot.kind is SlotKind.DISTAL:
            return self.seed.measure
        if slot.kind is SlotKind.CHAIN:
            return self.target.convex_set.at(slot.parameter)
        return None

    def prescribed_measure(self, n: int) -> Optional[Tuple[FiniteMeasure, Fraction]]:
        """Measure of the last chain or distal slot started before n, with its stage tolerance 5 eps_k + 2 delta_k."""
        starts = [s.a for s in self.slots]
        idx = bisect_right(starts, n) - 1
        while idx >= 0 and not self.slots[idx].measured:
            idx -= 1
        if idx < 0:
            return None
        slot = self.slots[idx]
        stage = self.stage(slot.stage)
        return self.slot_measure(slot), 5 * stage.eps + 2 * stage.delta

    def birkhoff_grid(self) -> List[int]:
        """Tracking checkpoints and distal-slot ends, increasing."""
        times = {s.b for s in self.slots if s.turn or s.kind is SlotKind.DISTAL}
        return sorted(times)

    def checkpoint_table(self) -> List[dict]:
        rows = []
        for k in range(1, self.stage_count + 1):
            stage = self.stage(k)
            common = {"stage": k, "eps": stage.eps, "delta": stage.delta}
            rows.append({**common, "kind": "closeness", "time": self.closeness_checkpoint(k)})
            for group in range(1, k + 1):
                a, b = self.separation_window(group, k)
                rows.append({**common, "kind": "separation", "group": group, "a": a, "b": b})
                time, _ = self.tracking_checkpoint(group, k)
                rows.append({**common, "kind": "tracking", "group": group, "time": time})
            if k in self.alpha_times:
                rows.append({**common, "kind": "alpha", "time": self.alpha_times[k]})
        return rows

    def describe(self) -> dict:
        return {
            "model": self.model.describe(),
            "seed": self.seed.describe(),
            "target": self.target.describe(),
            "alpha": self.alpha.name if self.alpha else None,
            "open_word": format_word(self.open_word, self.model.n),
            "eps": str(self.eps),
            "delta": str(self.delta),
            "dwell": self.dwell,
            "stages": [s.describe() for s in self.stages],
            "slot_count": len(self.slots),
            "last_time_digits": len(str(self.last_time)),
            "alpha_times": {str(k): str(v) for k, v in self.alpha_times.items()},
        }


def default_epsilon(model: ShiftModel, open_word: Sequence[int], seed: DistalSeed) -> Fraction:
    """default_eps times the open-target radius, capped at zeta / 4 so zeta - 5 eps_1 > 0."""
    radius = Fraction(1, model.n ** len(open_word))
    return min(get_settings().default_eps * radius, seed.zeta / 4)


def _require_construction_model(model: ShiftModel) -> TransitionSystem:
    if not isinstance(model, TransitionSystem):
        raise CapabilityError("constructions run on full shifts and transition systems")
    if not model.is_mixing():
        raise CapabilityError("constructions need a mixing transition system")
    return model


def _alpha_time(alpha: AlphaFunction, a: int, eps: Fraction, diameter: Fraction) -> int:
    """Smallest d with 4 alpha(d) eps > a diam + 2 eps."""
    need = a * diameter + 2 * eps

    def reached(d: int) -> bool:
        return 4 * alpha(d) * eps > need

    cap_bits = 16 * (a.bit_length() + math.ceil(math.log2(1 / eps)) + 1) + 64
    hi = 1
    while not reached(hi):
        hi *= 2
        if hi.bit_length() > cap_bits:
            raise BudgetError(
                f"alpha '{alpha.name}' does not reach the checkpoint requirement within 2^{cap_bits}"
            )
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class _Plan:
    kind: SlotKind
    stage: int
    group: int
    index: int
    threshold: int
    word: Optional[Word] = None
    parameter: Optional[Fraction] = None
    turn: bool = False


def _stage_params(
    model: TransitionSystem,
    seed: DistalSeed,
    k: int,
    eps: Fraction,
    delta: Fraction,
    exponential: bool,
    mode: DistalMode,
    depth: Optional[int],
) -> StageParams:
    eps_k = eps / 2**k
    delta_k = delta / 2 ** (k - 1)
    eta = eps_k * (1 - Fraction(1, model.n)) / 4 if exponential else eps_k
    metric = model.metric
    return StageParams(
        stage=k,
        eps=eps_k,
        delta=delta_k,
        eta=eta,
        trace_depth=m_epsilon(metric, eta),
        gap=model.specification_constant(eta),
        word_length=m_epsilon(metric, eps_k),
        distal=distal_blocks(seed, eps_k, delta_k, model, mode, depth),
    )


class _ChainCache:
    """Periodic approximations of chain points, keyed by parameter and stage eps."""

    def __init__(self, model: ShiftModel, target: SaturationTarget, depth: Optional[int]):
        self.model = model
        self.target = target
        self.depth = depth
        self._words: Dict[Tuple[Fraction, Fraction], Word] = {}

    def word(self, s: Fraction, eps: Fraction) -> Word:
        key = (s, eps)
        if key not in self._words:
            point = self.target.convex_set.at(s)
            self._words[key] = periodic_approximation(point, eps, self.model, self.depth).word
        return self._words[key]


def _plan_slots(
    model: TransitionSystem,
    target: SaturationTarget,
    stages: Sequence[StageParams],
    open_word: Word,
    rng_seed: Optional[int],
    depth: Optional[int],
) -> List[_Plan]:
    plans: List[_Plan] = []
    cache = _ChainCache(model, target, depth)
    if open_word:
        cycle = open_word + shortest_bridge(model, open_word, open_word)
        plans.append(_Plan(SlotKind.TARGET, 1, 0, 0, 0, cycle))
    for stage in stages:
        k = stage.stage
        words = model.words(stage.word_length)
        if rng_seed is not None:
            random.Random(rng_seed + k).shuffle(words)
        for j, u in enumerate(words, start=1):
            plans.append(_Plan(SlotKind.DENSE, k, 0, j, 0, u + shortest_bridge(model, u, u)))
        for group in range(1, k + 1):
            chain = chain_along(
                target.convex_set,
                target.distal_parameter,
                target.dense.parameter(group),
                stage.eps,
                depth,
            )
            params = chain.steps
            c = len(params)
            for s in range(1, 2 * c):
                j = s if s <= c else 2 * c - s
                cycle = cache.word(params[j - 1], stage.eps)
                threshold = periodic_measure_convergence(cycle).threshold(stage.eps)
                plans.append(
                    _Plan(SlotKind.CHAIN, k, group, s, threshold, cycle, params[j - 1], s == c)
                )
            plans.append(_Plan(SlotKind.DISTAL, k, group, 2 * c, stage.distal.threshold))
        logger.debug("stage %d planned: %d dense words", k, len(words))
    return plans


def build_schedule(
    model: ShiftModel,
    seed: DistalSeed,
    target: SaturationTarget,
    stages: int,
    alpha: Optional[AlphaFunction] = None,
    open_word: Sequence[int] = (),
    eps: Optional[Fraction] = None,
    delta: Optional[Fraction] = None,
    dwell: Optional[int] = None,
    distal_mode: DistalMode = DistalMode.PERIODIC,
    rng_seed: Optional[int] = None,
    depth: Optional[int] = None,
) -> TraceSchedule:
    """
    Lay out a tracing schedule with the greedy smallest admissible times.

    Args:
        model: Mixing transition system
        seed: Distal seed whose orbits live in the model
        target: K with its dense sequence
        stages: Number of stages m >= 1
        alpha: Weight function; switches on the exponential budget and the alpha checkpoints
        open_word: Word every member starts with
        eps: Base tracing budget (default_epsilon when omitted)
        delta: delta_1 (settings.default_delta when omitted)
        dwell: Extra coordinates each dense slot traces (settings.dwell when omitted)
        distal_mode: Construction of the distal rows
        rng_seed: Shuffles the dense-word order per stage
        depth: Weak* truncation depth

    Returns:
        TraceSchedule

    Raises:
        DomainError: stages < 1, inadmissible open word, eps >= zeta
        CapabilityError: the model is not a mixing transition system
        BudgetError: an alpha checkpoint is out of reach
    """
    if stages < 1:
        raise DomainError("a schedule needs at least one stage")
    model = _require_construction_model(model)
    settings = get_settings()
    open_word = model.check_word(open_word) if open_word else ()
    eps = Fraction(eps) if eps is not None else default_epsilon(model, open_word, seed)
    delta = Fraction(delta) if delta is not None else settings.default_delta
    dwell = settings.dwell if dwell is None else dwell
    if eps <= 0 or not 0 < delta <= 1 or dwell < 0:
        raise DomainError("schedule needs eps > 0, delta in (0, 1] and dwell >= 0")
    if open_word and eps >= Fraction(1, model.n ** len(open_word)):
        raise DomainError("eps must be below the open-target radius")

    params = tuple(
        _stage_params(model, seed, k, eps, delta, alpha is not None, distal_mode, depth)
        for k in range(1, stages + 1)
    )
    plans = _plan_slots(model, target, params, open_word, rng_seed, depth)
    diameter = model.metric.diameter(Side.ONE)

    # lead[p]: distance from plan p's end to the start of the next measured plan
    lead: List[Optional[Tuple[int, int]]] = [None] * len(plans)
    upcoming: Optional[Tuple[int, int]] = None
    for p in range(len(plans) - 1, -1, -1):
        lead[p] = upcoming
        plan = plans[p]
        gap = params[plan.stage - 1].gap
        if plan.kind in (SlotKind.CHAIN, SlotKind.DISTAL):
            upcoming = (gap, plan.threshold)
        elif upcoming is not None:
            span = dwell if plan.kind is SlotKind.DENSE else 0
            upcoming = (upcoming[0] + gap + span, upcoming[1])

    slots: List[Slot] = []
    alpha_times: Dict[int, int] = {}
    a = 0
    for p, plan in enumerate(plans):
        stage = params[plan.stage - 1]
        if plan.kind is SlotKind.TARGET:
            b = a
        elif plan.kind is SlotKind.DENSE:
            b = a + dwell
        else:
            ahead = lead[p] or (stage.gap, 0)
            numerator = a + ahead[0] + ahead[1]
            b = a + max(plan.threshold + 1, math.floor(numerator / stage.delta) + 1)
            if plan.turn and plan.group == 1 and alpha is not None:
                d = _alpha_time(alpha, a, stage.eps, diameter)
                alpha_times[plan.stage] = d
                b = max(b, math.floor(d / stage.delta) + 1)
        slots.append(
            Slot(
                plan.kind, plan.stage, plan.group, plan.index, a, b,
                plan.threshold, plan.word, plan.parameter, plan.turn,
            )
        )
        if p + 1 < len(plans):
            a = b + params[plans[p + 1].stage - 1].gap

    schedule = TraceSchedule(
        model, seed, target, alpha, open_word, eps, delta, dwell, params, tuple(slots), alpha_times
    )
    logger.info(
        "schedule built: %d stages, %d slots, last time has %d digits",
        stages, len(slots), len(str(schedule.last_time)),
    )
    return schedule


def _ratio_lead(schedule: TraceSchedule, position: int) -> Tuple[int, int]:
    """(distance to the next measured slot's start from this slot's end, its threshold)."""
    slots = schedule.slots
    here = slots[position]
    for nxt in slots[position + 1 :]:
        if nxt.measured:
            return nxt.a - here.b, nxt.threshold
    return schedule.stage(here.stage).gap, 0


def verify_schedule(schedule: TraceSchedule) -> Dict[str, int]:
    """
    Re-check every schedule invariant exactly.

    Returns:
        Counts of the checks performed

    Raises:
        InvariantError: on the first violated inequality
    """
    model = schedule.model
    n = model.n
    checks = {"stages": 0, "gaps": 0, "ratios": 0, "alpha": 0, "dense_words": 0}
    for stage in schedule.stages:
        k = stage.stage
        if stage.eps != schedule.eps / 2**k or stage.delta != schedule.delta / 2 ** (k - 1):
            raise InvariantError(f"stage {k}: eps/delta do not halve")
        if schedule.alpha is not None:
            if stage.eta * 4 / (1 - Fraction(1, n)) > stage.eps:
                raise InvariantError(f"stage {k}: exponential budget exceeds eps_k")
        elif stage.eta != stage.eps:
            raise InvariantError(f"stage {k}: eta differs from eps_k")
        if stage.gap != model.specification_constant(stage.eta):
            raise InvariantError(f"stage {k}: gap is not the specification constant")
        if stage.trace_depth != m_epsilon(model.metric, stage.eta):
            raise InvariantError(f"stage {k}: trace depth does not match eta")
        dense = {s.word[: stage.word_length] for s in schedule.slots_in(k) if s.kind is SlotKind.DENSE}
        if dense != set(model.words(stage.word_length)):
            raise InvariantError(f"stage {k}: dense slots miss admissible words")
        checks["dense_words"] += len(dense)
        checks["stages"] += 1

    if schedule.open_word:
        first = schedule.slots[0]
        if first.kind is not SlotKind.TARGET or first.word[: len(schedule.open_word)] != schedule.open_word:
            raise InvariantError("the first slot does not trace the open target")

    for p, slot in enumerate(schedule.slots):
        if p + 1 < len(schedule.slots):
            nxt = schedule.slots[p + 1]
            if nxt.a - slot.b != schedule.stage(nxt.stage).gap:
                raise InvariantError(f"gap before slot {p + 1} differs from its stage constant")
            checks["gaps"] += 1
        if not slot.measured:
            continue
        stage = schedule.stage(slot.stage)
        length = slot.b - slot.a
        if length <= slot.threshold:
            raise InvariantError(f"slot {p}: length {length} does not exceed N = {slot.threshold}")
        distance, threshold = _ratio_lead(schedule, p)
        if Fraction(slot.a + distance + threshold, length) >= stage.delta:
            raise InvariantError(f"slot {p}: ratio inequality fails at stage {slot.stage}")
        checks["ratios"] += 1
        if slot.turn and slot.group == 1 and schedule.alpha is not None:
            d = schedule.alpha_times.get(slot.stage)
            if d is None:
                raise InvariantError(f"stage {slot.stage}: missing alpha checkpoint")
            diameter = model.metric.diameter(Side.ONE)
            if Fraction(d, slot.b) >= stage.delta:
                raise InvariantError(f"stage {slot.stage}: alpha checkpoint ratio fails")
            if not 4 * schedule.alpha(d) * stage.eps > slot.a * diameter + 2 * stage.eps:
                raise InvariantError(f"stage {slot.stage}: alpha checkpoint requirement fails")
            checks["alpha"] += 1
    logger.debug("schedule verified: %s", checks)
    return checks


# families ---------------------------------------------------------------------


def normalize_prefix(prefix: Union[str, Sequence[int]], stages: int) -> Prefix:
    """'121' or (1, 2, 1) -> (1, 2, 1), checked against the stage count."""
    symbols = tuple(int(ch) for ch in prefix) if isinstance(prefix, str) else tuple(prefix)
    if len(symbols) != stages or any(s not in (1, 2) for s in symbols):
        raise DomainError(f"prefix {prefix!r} is not a word of length {stages} over {{1, 2}}")
    return symbols


@dataclass
class ScrambleFamily:
    model: ShiftModel
    schedule: TraceSchedule
    members: Dict[Prefix, BlockStream]
    zeta: Fraction
    open_word: Word
    horizon: int
    tail_sums: Dict[Prefix, Fraction] = field(default_factory=dict)

    @property
    def side(self) -> Side:
        return next(iter(self.members.values())).side if self.members else Side.ONE

    def member(self, prefix: Union[str, Sequence[int]]) -> BlockStream:
        key = normalize_prefix(prefix, self.schedule.stage_count)
        if key not in self.members:
            raise DomainError(f"prefix {prefix!r} was not constructed")
        return self.members[key]

    def pairs(self) -> List[Tuple[Prefix, Prefix]]:
        keys = sorted(self.members)
        return [(u, v) for i, u in enumerate(keys) for v in keys[i + 1 :]]

    def t0(self, stage: int = 1) -> Fraction:
        """zeta - 5 eps_k, the separation threshold achieved at stage k."""
        return self.zeta - 5 * self.schedule.stage(stage).eps

    def first_difference(self, u: Prefix, v: Prefix) -> Optional[int]:
        for i, (p, q) in enumerate(zip(u, v), start=1):
            if p != q:
                return i
        return None

    def shared_until(self, u: Prefix, v: Prefix) -> int:
        """Members u and v coincide on [1, a] for the first distal slot where they differ."""
        i = self.first_difference(u, v)
        if i is None:
            return self.horizon
        a, _ = self.schedule.separation_window(i, i)
        return a

    def describe(self) -> dict:
        n = self.model.n
        out = {
            "members": ["".join(map(str, key)) for key in sorted(self.members)],
            "zeta": str(self.zeta),
            "t0": str(self.t0()),
            "open_word": format_word(self.open_word, n),
            "horizon": str(self.horizon),
            "side": self.side.value,
        }
        if self.tail_sums:
            out["tail_sums"] = {"".join(map(str, k)): str(v) for k, v in self.tail_sums.items()}
        return out


def build_member(schedule: TraceSchedule, prefix: Prefix) -> BlockStream:
    """Copy every slot's source in order, bridging consecutive copies with gap K - M."""
    model = schedule.model
    builder = BlockStreamBuilder(model.n, Side.ONE, start=1)
    previous: Optional[Tuple[BlockStream, int]] = None
    for slot in schedule.slots:
        source = schedule.source(slot, prefix)
        depth = schedule.stage(slot.stage).trace_depth
        if previous is not None:
            last_source, copied = previous
            gap = slot.a + 1 - builder.cursor
            tail = (last_source.realize(copied),)
            head = (source.realize(1),)
            bridge = model.bridge(tail, head, gap)
            if bridge is None:
                raise InvariantError(f"no bridge of length {gap} before slot at {slot.a}")
            builder.append_word(bridge)
        if builder.cursor != slot.a + 1:
            raise InvariantError(f"slot at {slot.a} starts at position {builder.cursor}")
        copied = slot.b - slot.a + depth
        builder.append_copy(source, 1, copied)
        previous = (source, copied)
    source, copied = previous
    return builder.build(copy_extender(source, copied + 1, builder.cursor))


def verify_admissible(model: ShiftModel, x: BlockStream, lo: int, hi: int) -> None:
    """Every piece is admissible and so is every junction between pieces on [lo, hi]."""
    for seg_lo, seg_hi, piece in x.segments(lo, hi):
        if seg_hi - seg_lo + 1 >= piece.period:
            ok = model.cyclic_admissible(piece.word)
        else:
            ok = model.admissible(x.window(seg_lo, seg_hi + 1))
        if not ok:
            raise InvariantError(f"inadmissible piece at {seg_lo}")
        if seg_lo > lo and not model.admissible(x.window(seg_lo - 1, seg_lo + 1)):
            raise InvariantError(f"inadmissible junction at {seg_lo}")


def verify_tracing(family: ScrambleFamily) -> int:
    """
    Exact coordinate check of every slot copy in every member.

    Returns:
        Number of slot copies checked
    """
    schedule = family.schedule
    checked = 0
    for prefix, member in family.members.items():
        for slot in schedule.slots:
            source = schedule.source(slot, prefix)
            span = slot.b - slot.a + schedule.stage(slot.stage).trace_depth
            if not agree_on(member.shifted(slot.a), source, 1, span):
                raise InvariantError(
                    f"member {prefix} does not trace its {slot.kind.value} slot at {slot.a}"
                )
            checked += 1
    return checked


def construct_family(
    schedule: TraceSchedule,
    prefixes: Iterable[Union[str, Sequence[int]]],
    horizon: Optional[int] = None,
    verify: bool = True,
) -> ScrambleFamily:
    """
    Build the members x_xi for the requested prefixes.

    Args:
        schedule: Schedule built for the model
        prefixes: Words over {1, 2} of length equal to the stage count
        horizon: Realized horizon (defaults to the schedule horizon)
        verify: Re-check admissibility and tracing of every member

    Returns:
        ScrambleFamily

    Raises:
        DomainError: horizon below the last scheduled time, or a malformed prefix
        InvariantError: a verification failed
    """
    verify_schedule(schedule)
    horizon = schedule.horizon if horizon is None else horizon
    if horizon < schedule.last_time:
        raise DomainError("horizon ends before the last scheduled time")
    keys = sorted({normalize_prefix(p, schedule.stage_count) for p in prefixes})
    members = {key: build_member(schedule, key) for key in keys}
    family = ScrambleFamily(
        schedule.model, schedule, members, schedule.seed.zeta, schedule.open_word, horizon
    )
    if verify:
        for member in members.values():
            verify_admissible(schedule.model, member, 1, horizon)
        verify_tracing(family)
    logger.info("family constructed: %d members, horizon %d digits", len(members), len(str(horizon)))
    return family


# backward tracing ---------------------------------------------------------------


def _junction(model: TransitionSystem, z: BlockStream, first: int) -> Tuple[int, Word]:
    if model.admissible((z.realize(0), first)):
        return 0, ()
    limit = 4 * (model.n + 1) ** 2 + 64
    for length in range(1, limit + 1):
        word = model.bridge((z.realize(-length),), (first,), length)
        if word is not None:
            return length, word
    raise BudgetError(f"no junction of length <= {limit} onto z")


def backward_tail_sum(model: ShiftModel, x: BlockStream, z: BlockStream, reach: int) -> Fraction:
    """
    sum_{i >= 0} d(sigma^-i x, sigma^-i z) for x equal to z below -reach + 1.

    With D the disagreement coordinates, the i-th term is n^-min_{c in D} |c + i|; past
    i = reach every c + i is positive and the terms form a geometric tail.
    """
    n = model.n
    guard = get_settings().guard_depth
    negatives = [c for c in range(-reach + 1, 1) if x.realize(c) != z.realize(c)]
    positive = next((c for c in range(1, guard + 1) if x.realize(c) != z.realize(c)), guard + 1)
    disagreements = negatives + [positive]
    lowest = min(disagreements)
    total = Fraction(0)
    for i in range(reach):
        total += Fraction(1, n ** min(abs(c + i) for c in disagreements))
    total += Fraction(n, n ** (lowest + reach) * (n - 1))
    return total


def backward_trace(
    family: ScrambleFamily, z: BlockStream, eps: Fraction
) -> ScrambleFamily:
    """
    Extend every member to a two-sided stream that agrees with z on the far past.

    Each member keeps its positive coordinates; below them come z's coordinates,
    joined through the shortest admissible bridge ending at index 0.

    Raises:
        CapabilityError: the model is not a transition system
        DomainError: z is not two-sided or admissible, or the tail sum exceeds eps
            (the message reports the least feasible eps)
    """
    model = family.model
    if not isinstance(model, TransitionSystem):
        raise CapabilityError("backward tracing needs a two-sided transition system")
    if z.side is not Side.TWO:
        raise DomainError("z must be a two-sided stream")
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    guard = get_settings().guard_depth
    if not model.admissible(z.window(-guard, guard + 1)):
        raise DomainError("z is not admissible in the model")

    members: Dict[Prefix, BlockStream] = {}
    sums: Dict[Prefix, Fraction] = {}
    for prefix, x in family.members.items():
        reach, bridge = _junction(model, z, x.realize(1))
        z_first = z.store.starts[0] - z.offset
        pieces: List[Piece] = [piece for _, _, piece in z.segments(min(z_first, -reach), -reach)]
        if bridge:
            pieces.append(Piece(-reach + 1, bridge, 0))
        pieces.extend(piece for _, _, piece in x.segments(1, x.known_end))
        two_sided = BlockStream(
            pieces,
            model.n,
            Side.TWO,
            known_end=x.known_end,
            extender=copy_extender(x, x.known_end + 1, x.known_end + 1),
        )
        total = backward_tail_sum(model, two_sided, z, reach)
        if total > eps:
            raise DomainError(
                f"junction infeasible at eps {eps}: the least feasible eps is {total}"
            )
        verify_admissible(model, two_sided, -reach - guard, guard)
        members[prefix] = two_sided
        sums[prefix] = total
    logger.info("backward trace: %d members joined onto z", len(members))
    return ScrambleFamily(
        model,
        family.schedule,
        members,
        family.zeta,
        family.open_word,
        family.horizon,
        sums,
    )


# fixed-point exclusion --------------------------------------------------------------


@dataclass(frozen=True)
class FixedPointPair:
    x: BlockStream
    y: BlockStream
    fractions: Dict[Fraction, Fraction]


def fixed_point_exclusion(
    model: ShiftModel,
    symbol: int = 0,
    pairs: int = 20,
    horizon: int = 10**4,
    t_grid: Optional[Sequence[Fraction]] = None,
    rng_seed: int = 0,
) -> List[FixedPointPair]:
    """
    Random pairs of streams eventually equal to symbol^inf, with their closeness fractions.

    Prefixes are random admissible words of length at most horizon / 200, so every
    closeness fraction sits near 1: pairs asymptotic to a fixed point are never distal.
    """
    if not model.cyclic_admissible((symbol,)):
        raise DomainError(f"{symbol}^inf is not a point of the model")
    if horizon < 200:
        raise DomainError("fixed-point exclusion needs a horizon of at least 200")
    rng = random.Random(rng_seed)
    diameter = model.metric.diameter(Side.ONE)
    grid = [Fraction(t) for t in (t_grid or (diameter / 4, diameter / 2, diameter))]

    def stream() -> BlockStream:
        word: Word = ()
        for _ in range(rng.randint(1, horizon // 200)):
            choices = model.extensions(word)
            word += (rng.choice(choices),)
        tail = shortest_bridge(model, word, (symbol,))
        return (
            BlockStreamBuilder(model.n)
            .append_word(word + tail)
            .append_periodic((symbol,), 1)
            .build()
        )

    out: List[FixedPointPair] = []
    for _ in range(pairs):
        x, y = stream(), stream()
        engine = pair_engine(x, y, model.metric, horizon)
        fractions = {t: Fraction(engine.close_count(t, horizon), horizon) for t in grid}
        out.append(FixedPointPair(x, y, fractions))
    return out
