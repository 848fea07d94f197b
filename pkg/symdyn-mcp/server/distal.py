"""Distal seeds and the two-row distal block streams.

A seed fixes two periodic measures and a weight theta. Each measure comes with a
distal generic pair: w^inf and a rotation of it, whose orbits never get closer than
zeta. ``distal_blocks`` glues blocks of both pairs into two streams whose empirical
measures approach theta mu1 + (1 - theta) mu2 while staying zeta-apart most of the time.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Callable, List, Optional, Tuple

from mcp.server.fastmcp.utilities.logging import get_logger

from errors import BudgetError, DomainError, InvariantError
from measures import (
    EmpiricalMeasure,
    FiniteMeasure,
    PeriodicMeasure,
    convex,
    periodic_measure_convergence,
    weak_star_distance,
)
from pair_engine import GeometricPairEngine
from settings import get_settings
from streams import BlockStream, Extender, Piece, PieceStore
from symbolic import Word, m_epsilon, separating_family

logger = get_logger(__name__)

# rounds inspected past the analytic threshold in geometric mode
_LOOKAHEAD = 64


class DistalMode(str, Enum):
    PERIODIC = "periodic"
    GEOMETRIC = "geometric"


def _rotate(word: Word, r: int) -> Word:
    r %= len(word)
    return word[r:] + word[:r]


def separation_depth(word: Word, rotation: int) -> int:
    """
    Worst first-disagreement index between w^inf and its rotation, over all shifts.

    The orbits of w^inf and sigma^rotation(w^inf) stay at distance at least
    n^-depth, and the bound is attained.
    """
    p = len(word)
    if rotation % p == 0:
        raise DomainError("a rotation by a multiple of the period is the same point")
    worst = 0
    for j in range(p):
        k = 1
        while word[(j + k - 1) % p] == word[(j + rotation + k - 1) % p]:
            k += 1
            if k > p:
                raise DomainError("word is not primitive")
        worst = max(worst, k)
    return worst


@dataclass(frozen=True)
class DistalPair:
    """p = w^inf and q = sigma^rotation(w^inf) with inf_j d(sigma^j p, sigma^j q) = n^-depth."""

    measure: PeriodicMeasure
    word: Word
    rotation: int
    depth: int

    @property
    def zeta(self) -> Fraction:
        return Fraction(1, self.measure.alphabet_size**self.depth)

    @property
    def rotated(self) -> Word:
        return _rotate(self.word, self.rotation)

    def streams(self) -> Tuple[BlockStream, BlockStream]:
        n = self.measure.alphabet_size
        return (
            BlockStream.periodic(self.word, n),
            BlockStream.periodic(self.word, n, phase=self.rotation),
        )


def distal_pair(mu: PeriodicMeasure) -> DistalPair:
    """The distal generic pair of a periodic measure with the largest separation."""
    if mu.is_fixed_point:
        raise DomainError(
            "separation budget exhausted: a fixed-point measure has no distal pair (zeta = 0)"
        )
    word = mu.canonical
    depth, rotation = min((separation_depth(word, r), r) for r in range(1, len(word)))
    return DistalPair(mu, word, rotation, depth)


@dataclass(frozen=True)
class DistalSeed:
    """Two periodic measures with their distal pairs and a mixing weight."""

    mu1: PeriodicMeasure
    mu2: PeriodicMeasure
    theta: Fraction
    pairs: Tuple[DistalPair, DistalPair]

    @property
    def identical(self) -> bool:
        return self.mu1 == self.mu2

    @property
    def active_pairs(self) -> List[DistalPair]:
        out = []
        if self.theta > 0:
            out.append(self.pairs[0])
        if self.theta < 1:
            out.append(self.pairs[1])
        return out

    @property
    def zeta(self) -> Fraction:
        return min(pair.zeta for pair in self.active_pairs)

    @cached_property
    def measure(self) -> FiniteMeasure:
        """theta mu1 + (1 - theta) mu2, built once so K can name it by identity."""
        if self.theta == 1 or self.identical:
            return self.mu1
        if self.theta == 0:
            return self.mu2
        return convex([(self.theta, self.mu1), (1 - self.theta, self.mu2)])

    def describe(self) -> dict:
        return {
            "mu1": self.mu1.describe(),
            "mu2": self.mu2.describe(),
            "theta": str(self.theta),
            "zeta": str(self.zeta),
            "rotations": [pair.rotation for pair in self.pairs],
        }


def make_seed(mu1: FiniteMeasure, mu2: FiniteMeasure, theta=1) -> DistalSeed:
    """
    Build a distal seed.

    Args:
        mu1: First periodic measure
        mu2: Second periodic measure (may equal mu1)
        theta: Weight of mu1 in [0, 1]

    Returns:
        The seed with its distal pairs

    Raises:
        DomainError: for non-periodic or fixed-point measures, or theta outside [0, 1]
    """
    theta = Fraction(theta)
    if not 0 <= theta <= 1:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    if not isinstance(mu1, PeriodicMeasure) or not isinstance(mu2, PeriodicMeasure):
        raise DomainError("distal seeds are built from periodic measures")
    if mu1.alphabet_size != mu2.alphabet_size:
        raise DomainError("seed measures live on different alphabets")
    pairs = (distal_pair(mu1), distal_pair(mu2))
    return DistalSeed(mu1, mu2, theta, pairs)


@dataclass(frozen=True)
class DistalBlocks:
    """x1, x2 and the threshold N beyond which both distal-block guarantees hold."""

    x1: BlockStream
    x2: BlockStream
    threshold: int
    eps: Fraction
    delta: Fraction
    mode: DistalMode
    period: Optional[int] = None

    def stream(self, choice: int) -> BlockStream:
        if choice == 1:
            return self.x1
        if choice == 2:
            return self.x2
        raise DomainError(f"distal choice must be 1 or 2, got {choice}")

    def describe(self) -> dict:
        return {
            "threshold": self.threshold,
            "eps": str(self.eps),
            "delta": str(self.delta),
            "mode": self.mode.value,
            "period": self.period,
        }


def _common_bridges(model, rows: List[Tuple[Word, Word]]) -> Tuple[int, List[Word]]:
    """Least gap G at which every (u, v) in `rows` has a bridge, with those bridges."""
    limit = 4 * (model.n + 1) ** 2 + 64
    for gap in range(limit + 1):
        found = [model.bridge(u, v, gap) for u, v in rows]
        if all(b is not None for b in found):
            return gap, found
    raise BudgetError(f"no common bridge length <= {limit} for the distal rounds")


def _round_words(pairs: Tuple[DistalPair, DistalPair], bridges: List[Word]):
    """Block words of the two rows: (w1, bridge, w2, bridge) for x1 and the rotations for x2."""
    p1, p2 = pairs
    row1 = (p1.word, bridges[0], p2.word, bridges[1])
    row2 = (p1.rotated, bridges[2], p2.rotated, bridges[3])
    return row1, row2


def _reps(theta: Fraction, scale: int, period: int) -> int:
    return max(1, round(theta * scale / period))


def _round(row, l1: int, l2: int) -> Word:
    w1, b12, w2, b21 = row
    return w1 * l1 + b12 + w2 * l2 + b21


def _check_orbits(seed: DistalSeed, model) -> None:
    for pair in seed.active_pairs:
        if not model.cyclic_admissible(pair.word):
            raise DomainError("the seed orbit does not live in the model")


def distal_blocks(
    seed: DistalSeed,
    eps: Fraction,
    delta: Fraction,
    model,
    mode: DistalMode = DistalMode.PERIODIC,
    depth: Optional[int] = None,
) -> DistalBlocks:
    """
    Two streams tracing distal pairs in the weight theta : (1 - theta).

    For every n > N the empirical measures E_n(x1), E_n(x2) lie within eps + delta
    of theta mu1 + (1 - theta) mu2 (truncated distance), and fewer than delta n of
    the indices i < n have d(sigma^i x1, sigma^i x2) < zeta - eps.

    Args:
        seed: Distal seed
        eps: Tracing budget, below zeta
        delta: Closeness budget in (0, 1]
        model: Shift model holding both orbits
        mode: periodic (repeat one round) or geometric (rounds grow by 1 + delta)
        depth: Weak* truncation depth

    Returns:
        DistalBlocks

    Raises:
        DomainError: if eps >= zeta or an orbit leaves the model
    """
    eps, delta = Fraction(eps), Fraction(delta)
    if eps <= 0 or not 0 < delta <= 1:
        raise DomainError("distal blocks need eps > 0 and delta in (0, 1]")
    zeta = seed.zeta
    if eps >= zeta:
        raise DomainError(f"separation budget exhausted: eps {eps} >= zeta {zeta}")
    _check_orbits(seed, model)
    mode = DistalMode(mode)

    if seed.theta in (0, 1) or seed.identical:
        pair = seed.pairs[0] if seed.theta > 0 else seed.pairs[1]
        x1, x2 = pair.streams()
        threshold = periodic_measure_convergence(pair.word).threshold(eps)
        return DistalBlocks(x1, x2, threshold, eps, delta, mode, len(pair.word))

    p1, p2 = seed.pairs
    gap, bridges = _common_bridges(
        model,
        [(p1.word, p2.word), (p2.word, p1.word), (p1.rotated, p2.rotated), (p2.rotated, p1.rotated)],
    )
    rows = _round_words(seed.pairs, bridges)
    if mode is DistalMode.PERIODIC:
        return _periodic_blocks(seed, eps, delta, model, rows, gap, depth)
    return _geometric_blocks(seed, eps, delta, model, rows, gap, depth)


def _periodic_blocks(seed, eps, delta, model, rows, gap, depth) -> DistalBlocks:
    n = seed.mu1.alphabet_size
    target = seed.measure
    p1, p2 = seed.pairs
    cap = get_settings().explicit_cap
    scale = 4 * (len(p1.word) + len(p2.word) + 2 * gap)
    while True:
        l1 = _reps(seed.theta, scale, len(p1.word))
        l2 = _reps(1 - seed.theta, scale, len(p2.word))
        r1, r2 = _round(rows[0], l1, l2), _round(rows[1], l1, l2)
        period = len(r1)
        if period > cap:
            raise BudgetError("distal round exceeds the explicit cap")
        d1, _ = weak_star_distance(PeriodicMeasure(r1, n), target, depth)
        d2, _ = weak_star_distance(PeriodicMeasure(r2, n), target, depth)
        if d1 <= eps and d2 <= eps:
            x1, x2 = BlockStream.periodic(r1, n), BlockStream.periodic(r2, n)
            engine = GeometricPairEngine(x1, x2, model.metric, period)
            close = engine.close_count(seed.zeta - eps, period)
            if Fraction(close, period) < delta / 2:
                break
        scale *= 2
    if not (model.cyclic_admissible(r1) and model.cyclic_admissible(r2)):
        raise InvariantError("distal round left the model")
    threshold = math.ceil(Fraction(2 * period) / delta)
    logger.debug("distal blocks: round %d, close %d, threshold %d", period, close, threshold)
    return DistalBlocks(x1, x2, threshold, eps, delta, DistalMode.PERIODIC, period)


def _round_extender(layout: Callable[[int], List[Tuple[Word, int]]], first_round: int) -> Extender:
    """Extender appending whole rounds j = first_round, first_round + 1, ... on demand."""
    state = {"round": first_round}

    def extend(store: PieceStore, need: int) -> None:
        while store.known_end < need:
            cursor = store.known_end + 1
            for word, length in layout(state["round"]):
                store.append(Piece(cursor, word, 0))
                cursor += length
            store.known_end = cursor - 1
            state["round"] += 1

    return extend


def _geometric_blocks(seed, eps, delta, model, rows, gap, depth) -> DistalBlocks:
    n = seed.mu1.alphabet_size
    p1, p2 = seed.pairs
    rho = 1 + delta
    base = 4 * (len(p1.word) + len(p2.word) + 2 * gap)
    lengths: List[int] = [base]

    def length(j: int) -> int:
        while len(lengths) <= j:
            lengths.append(math.ceil(lengths[-1] * rho))
        return lengths[j]

    def reps(j: int) -> Tuple[int, int]:
        scale = length(j)
        return _reps(seed.theta, scale, len(p1.word)), _reps(1 - seed.theta, scale, len(p2.word))

    def layout_for(row):
        w1, b12, w2, b21 = row

        def layout(j: int) -> List[Tuple[Word, int]]:
            l1, l2 = reps(j)
            out = [(w1, l1 * len(w1))]
            if b12:
                out.append((b12, len(b12)))
            out.append((w2, l2 * len(w2)))
            if b21:
                out.append((b21, len(b21)))
            return out

        return layout

    def round_length(j: int) -> int:
        l1, l2 = reps(j)
        return l1 * len(p1.word) + l2 * len(p2.word) + 2 * gap

    m = m_epsilon(model.metric, seed.zeta - eps)
    family_reach = max(len(w) for w in separating_family(n, depth or get_settings().truncation_depth))
    close_per_round = 2 * (gap + m)
    error_per_round = 3 * (len(p1.word) + len(p2.word)) + 2 * gap + 4 * family_reach

    def holds(j: int, total: int) -> bool:
        # n inside round j; total = length of rounds 0..j-1
        close_ok = Fraction((j + 1) * close_per_round, total) < delta
        partial = Fraction(round_length(j), total + round_length(j))
        measure_ok = Fraction(j * error_per_round, total) + partial <= eps + delta
        return close_ok and measure_ok

    budget = get_settings().search_budget
    totals = [0]
    for j in range(budget):
        totals.append(totals[-1] + round_length(j))
        if j < 1:
            continue
        window = []
        total = totals[-1]
        for ahead in range(1, _LOOKAHEAD + 1):
            window.append(holds(j + ahead, total))
            total += round_length(j + ahead)
        if all(window):
            threshold = totals[-1]
            break
    else:
        raise BudgetError("geometric distal rounds never meet the eps/delta budget")

    def build(row) -> BlockStream:
        layout = layout_for(row)
        pieces, cursor = [], 1
        for word, span in layout(0):
            pieces.append(Piece(cursor, word, 0))
            cursor += span
        return BlockStream(pieces, n, known_end=cursor - 1, extender=_round_extender(layout, 1))

    x1, x2 = build(rows[0]), build(rows[1])
    _spot_check(seed, eps, delta, model, x1, x2, threshold, depth)
    logger.debug("geometric distal blocks: threshold %d after %d rounds", threshold, j)
    return DistalBlocks(x1, x2, threshold, eps, delta, DistalMode.GEOMETRIC)


def _spot_check(seed, eps, delta, model, x1, x2, threshold, depth) -> None:
    """Exact check of both guarantees at the threshold."""
    if threshold > get_settings().explicit_cap:
        return
    target = seed.measure
    truncation = depth or get_settings().truncation_depth
    for x in (x1, x2):
        value, _ = weak_star_distance(EmpiricalMeasure(x, threshold, truncation), target, depth)
        if value > eps + delta:
            raise InvariantError(f"distal empirical measure at {threshold} is {value} from the target")
    engine = GeometricPairEngine(x1, x2, model.metric, threshold)
    if Fraction(engine.close_count(seed.zeta - eps, threshold), threshold) >= delta:
        raise InvariantError("distal rows are too often close at the threshold")
