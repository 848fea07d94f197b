"""Exact pair statistics for block-structured streams.

Two engines answer the same two questions about a pair (x, y) up to a horizon:

* ``close_count``: how many i in [0, n-1] have d(sigma^i x, sigma^i y) < t;
* ``cumulative``: certified bounds on S(i) = sum_{j<i} d(sigma^j x, sigma^j y).

``GeometricPairEngine`` handles one-sided streams under the geometric metric by
walking the merged piece boundaries of both streams and building, per zone, the
cyclic disagreement mask. ``IntervalPairEngine`` handles two-sided streams
(polynomial or geometric metric) through the disagreement set as a union of
intervals.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Dict, List, Optional, Tuple, TypeVar

import mpmath
import numpy as np
from mcp.server.fastmcp.utilities.logging import get_logger

from alphas import AlphaFunction
from errors import BudgetError, DomainError, PrecisionError
from settings import get_settings
from streams import BlockStream, Piece
from symbolic import MetricKind, ShiftMetric, Side, SymbolStream, m_epsilon

logger = get_logger(__name__)

Number = TypeVar("Number")


def as_block_stream(stream: SymbolStream, hi: int) -> BlockStream:
    """View any stream as a block stream that is exact on indices up to hi."""
    if isinstance(stream, BlockStream):
        return stream
    cap = get_settings().explicit_cap
    if stream.side is Side.ONE:
        if hi > cap:
            raise BudgetError(f"explicit realization of {hi} symbols exceeds cap {cap}")
        return BlockStream([Piece(1, stream.window(1, hi + 1))], stream.alphabet_size)
    if 2 * hi + 1 > cap:
        raise BudgetError(f"explicit realization of {2 * hi + 1} symbols exceeds cap {cap}")
    return BlockStream(
        [Piece(-hi, stream.window(-hi, hi + 1))], stream.alphabet_size, Side.TWO
    )


def merged_zones(x: BlockStream, y: BlockStream, lo: int, hi: int):
    """Maximal subranges of [lo, hi] on which both streams follow a single piece each."""
    xs = x.segments(lo, hi)
    ys = y.segments(lo, hi)
    i = j = 0
    cursor = lo
    while cursor <= hi:
        x_lo, x_hi, px = xs[i]
        y_lo, y_hi, py = ys[j]
        end = min(x_hi, y_hi)
        yield cursor, end, px.moved(cursor), py.moved(cursor)
        cursor = end + 1
        if x_hi == end:
            i += 1
        if y_hi == end:
            j += 1


@lru_cache(maxsize=2048)
def _disagreement_cycle(wx, ox, wy, oy, cycle) -> np.ndarray:
    """Disagreement mask over one cycle of two aligned periodic words."""
    r = np.arange(cycle)
    ax = np.asarray(wx, dtype=np.int64)[(ox + r) % len(wx)]
    ay = np.asarray(wy, dtype=np.int64)[(oy + r) % len(wy)]
    return ax != ay


def _cyclic_sum(prefix, r0: int, length: int, cycle: int):
    """Sum of cyclic entries r0, r0+1, ..., r0+length-1 given prefix sums of one cycle."""
    q, rem = divmod(length, cycle)
    total = int(prefix[cycle]) * q
    if rem:
        end = r0 + rem
        if end <= cycle:
            total += int(prefix[end]) - int(prefix[r0])
        else:
            total += int(prefix[cycle]) - int(prefix[r0]) + int(prefix[end - cycle])
    return total


def agree_on(x: BlockStream, y: BlockStream, lo: int, hi: int) -> bool:
    """True iff x and y coincide on every index in [lo, hi]."""
    cap = get_settings().pattern_cap
    for zlo, zhi, px, py in merged_zones(x, y, lo, hi):
        if px.word == py.word and px.phase == py.phase:
            continue
        cycle = min(math.lcm(len(px.word), len(py.word)), zhi - zlo + 1)
        if cycle > cap:
            raise BudgetError(f"comparison cycle of length {cycle} exceeds pattern cap {cap}")
        if _disagreement_cycle(px.word, px.phase, py.word, py.phase, cycle).any():
            return False
    return True


@dataclass
class _Zone:
    start: int
    end: int
    cycle: int = 0
    nd: Optional[np.ndarray] = None
    first_d: Optional[int] = None
    last_d: Optional[int] = None
    run_prefix: Optional[np.ndarray] = None
    head_dropped: bool = False
    head_start: bool = False
    scaled_prefix: Optional[np.ndarray] = None

    @property
    def agrees(self) -> bool:
        return self.nd is None

    def residue(self, c: int) -> int:
        return (c - self.start) % self.cycle


class GeometricPairEngine:
    """Exact close counts and cumulative distance bounds for one-sided streams."""

    def __init__(
        self,
        x: SymbolStream,
        y: SymbolStream,
        metric: ShiftMetric,
        horizon: int,
        guard: Optional[int] = None,
    ):
        settings = get_settings()
        if x.side is not Side.ONE or y.side is not Side.ONE:
            raise DomainError("the geometric pair engine compares one-sided streams")
        if metric.kind is not MetricKind.GEOMETRIC:
            raise DomainError("the geometric pair engine needs the geometric metric")
        if horizon < 1:
            raise DomainError("horizon must be at least 1")
        self.x, self.y = x, y
        self.metric = metric
        self.n = metric.base
        self.horizon = horizon
        self.guard = guard or settings.guard_depth
        self.limit = horizon + self.guard + 1
        self._pattern_cap = settings.pattern_cap
        bx = as_block_stream(x, self.limit)
        by = as_block_stream(y, self.limit)
        self.zones: List[_Zone] = [
            self._zone(lo, hi, px, py) for lo, hi, px, py in merged_zones(bx, by, 1, self.limit)
        ]
        self._starts = [z.start for z in self.zones]
        self._next_first: List[Optional[int]] = [None] * len(self.zones)
        upcoming: Optional[int] = None
        for k in range(len(self.zones) - 1, -1, -1):
            self._next_first[k] = upcoming
            if self.zones[k].first_d is not None:
                upcoming = self.zones[k].first_d
        # whether the position before each zone lies in a run of dropped terms
        self._continued: List[bool] = [False] * len(self.zones)
        for k in range(1, len(self.zones)):
            prev, c = self.zones[k - 1], self.zones[k].start - 1
            if prev.agrees or prev.last_d < c:
                nxt = self._next_first[k - 1]
                self._continued[k] = nxt is None or nxt - c + 1 > self.guard
        self._close_cache: Dict[int, List[int]] = {}
        self._escalated: Optional["GeometricPairEngine"] = None
        self._prefix_cache: Dict[Tuple[int, int], np.ndarray] = {}
        logger.debug("pair engine: %d zones up to %d", len(self.zones), self.limit)

    def _zone(self, lo: int, hi: int, px: Piece, py: Piece) -> _Zone:
        length = hi - lo + 1
        if px.word == py.word and px.phase == py.phase:
            return _Zone(lo, hi)
        full = math.lcm(len(px.word), len(py.word))
        cycle = min(full, length)
        if cycle > self._pattern_cap:
            raise BudgetError(
                f"disagreement cycle of length {cycle} exceeds pattern cap {self._pattern_cap}"
            )
        mask = _disagreement_cycle(px.word, px.phase, py.word, py.phase, cycle)
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return _Zone(lo, hi)
        doubled = np.concatenate([idx, idx + cycle])
        r = np.arange(cycle)
        nd = doubled[np.searchsorted(doubled, r)] - r
        # positions whose distance term falls below the guard, and where such runs begin
        dropped = nd >= self.guard
        starts = dropped & ~np.roll(dropped, 1)
        full_cycles, rem = divmod(length, cycle)
        in_rem = idx[idx < rem]
        if in_rem.size:
            last = full_cycles * cycle + int(in_rem.max())
        else:
            last = (full_cycles - 1) * cycle + int(idx.max())
        return _Zone(
            start=lo,
            end=hi,
            cycle=cycle,
            nd=nd,
            first_d=lo + int(idx[0]),
            last_d=lo + last,
            run_prefix=np.concatenate([[0], np.cumsum(starts)]),
            head_dropped=bool(dropped[0]),
            head_start=bool(starts[0]),
        )

    def _zone_index(self, c: int) -> int:
        return bisect_right(self._starts, c) - 1

    def _check_depth(self, m: int) -> None:
        if m > self.guard:
            raise PrecisionError(
                f"closeness depth {m} exceeds guard {self.guard}; raise guard_depth"
            )

    # close counts ---------------------------------------------------------

    def _close_prefix(self, zone_index: int, m: int) -> np.ndarray:
        key = (zone_index, m)
        prefix = self._prefix_cache.get(key)
        if prefix is None:
            zone = self.zones[zone_index]
            prefix = np.concatenate([[0], np.cumsum(zone.nd >= m)])
            self._prefix_cache[key] = prefix
        return prefix

    def _close_in_zone(self, k: int, m: int, lo: int, hi: int) -> int:
        zone = self.zones[k]
        total = 0
        if not zone.agrees and lo <= zone.last_d:
            a_hi = min(hi, zone.last_d)
            prefix = self._close_prefix(k, m)
            total += int(_cyclic_sum(prefix, zone.residue(lo), a_hi - lo + 1, zone.cycle))
            lo = a_hi + 1
        if lo <= hi:
            nxt = self._next_first[k]
            bound = (self.limit - m + 1) if nxt is None else nxt - m
            total += max(0, min(hi, bound) - lo + 1)
        return total

    def close_count(self, t: Fraction, n: int) -> int:
        """#{0 <= i < n : d(sigma^i x, sigma^i y) < t}."""
        if n < 0 or n > self.horizon:
            raise DomainError(f"n={n} outside [0, {self.horizon}]")
        t = Fraction(t)
        if t <= 0:
            return 0
        if t > 1:
            return n
        m = m_epsilon(self.metric, t)
        if m == 0:
            return n
        self._check_depth(m)
        cum = self._close_cache.get(m)
        if cum is None:
            cum = [0]
            for k, zone in enumerate(self.zones):
                cum.append(cum[-1] + self._close_in_zone(k, m, zone.start, zone.end))
            self._close_cache[m] = cum
        if n == 0:
            return 0
        k = self._zone_index(n)
        return cum[k] + self._close_in_zone(k, m, self.zones[k].start, n)

    # cumulative distances -------------------------------------------------

    @cached_property
    def _unit(self) -> int:
        return self.n**self.guard

    def _scaled_terms(self, zone: _Zone):
        if zone.scaled_prefix is None:
            g, n = self.guard, self.n
            terms = np.array(
                [n ** (g - int(k) - 1) if int(k) + 1 <= g else 0 for k in zone.nd],
                dtype=object,
            )
            prefix = np.empty(zone.cycle + 1, dtype=object)
            prefix[0] = 0
            prefix[1:] = np.cumsum(terms)
            zone.scaled_prefix = prefix
        return zone.scaled_prefix

    def _sum_in_zone(self, k: int, lo: int, hi: int) -> Tuple[int, int]:
        """Scaled sum of terms over c in [lo, hi] and the number of long runs touched."""
        zone = self.zones[k]
        scaled = 0
        runs = 0
        if not zone.agrees and lo <= zone.last_d:
            a_hi = min(hi, zone.last_d)
            scaled += int(
                _cyclic_sum(self._scaled_terms(zone), zone.residue(lo), a_hi - lo + 1, zone.cycle)
            )
            runs += int(_cyclic_sum(zone.run_prefix, zone.residue(lo), a_hi - lo + 1, zone.cycle))
            if lo == zone.start:
                runs += int(zone.head_dropped and not self._continued[k]) - int(zone.head_start)
            lo = a_hi + 1
        if lo <= hi:
            nxt = self._next_first[k]
            fresh = lo > zone.start or not self._continued[k]
            if nxt is None:
                runs += int(fresh)
            else:
                # term(c) = n^-(nxt - c + 1), kept when the exponent is at most guard
                e_lo = max(lo, nxt - self.guard + 1)
                if e_lo <= hi:
                    g, n = self.guard, self.n
                    a = g - nxt + e_lo - 1
                    b = g - nxt + hi - 1
                    scaled += (n ** (b + 1) - n**a) // (n - 1)
                if lo < nxt - self.guard + 1 and fresh:
                    runs += 1
        return scaled, runs

    @cached_property
    def _cumulative_prefix(self) -> List[Tuple[int, int]]:
        out = [(0, 0)]
        for k, zone in enumerate(self.zones):
            s, r = self._sum_in_zone(k, zone.start, zone.end)
            out.append((out[-1][0] + s, out[-1][1] + r))
        return out

    def cumulative(self, i: int) -> Tuple[Fraction, Fraction]:
        """Bounds (lo, hi) on sum_{j<i} d(sigma^j x, sigma^j y), strict above unless lo == hi."""
        if i < 0 or i > self.horizon:
            raise DomainError(f"i={i} outside [0, {self.horizon}]")
        if i == 0:
            return Fraction(0), Fraction(0)
        k = self._zone_index(i)
        base_s, base_r = self._cumulative_prefix[k]
        s, r = self._sum_in_zone(k, self.zones[k].start, i)
        lo = Fraction(base_s + s, self._unit)
        slack = Fraction(base_r + r, self._unit * (self.n - 1))
        return lo, lo + slack

    def alpha_count(self, alpha: Callable[[int], Fraction], t: Fraction, n: int) -> int:
        """
        #{1 <= i <= n : sum_{j<i} d(sigma^j x, sigma^j y) < alpha(i) t}.

        A straddled threshold is retried with a doubled guard, up to guard_cap.
        """
        t = Fraction(t)
        settings = get_settings()
        engine = self._escalated or self
        while True:
            try:
                count = count_alpha_hits(
                    engine.cumulative, lambda i: Fraction(alpha(i)) * t, 1, n, settings.leaf_scan
                )
                if engine is not self:
                    self._escalated = engine
                return count
            except PrecisionError:
                if engine.guard * 2 > settings.guard_cap:
                    raise
                logger.debug("alpha count straddled at guard %d; retrying", engine.guard)
                engine = GeometricPairEngine(
                    self.x, self.y, self.metric, self.horizon, guard=engine.guard * 2
                )


def _below(bound: Tuple[Number, Number], level: Number) -> bool:
    """True iff the bounded value is certainly below `level`."""
    s_lo, s_hi = bound
    return s_hi < level or (s_hi == level and s_lo < s_hi)


def count_alpha_hits(
    bounds: Callable[[int], Tuple[Number, Number]],
    threshold: Callable[[int], Number],
    lo: int,
    hi: int,
    leaf_scan: int,
) -> int:
    """
    Count i in [lo, hi] with S(i) < threshold(i) for nondecreasing S and threshold.

    Args:
        bounds: Bounds (lower, upper) on S(i) with lower <= S(i), and S(i) < upper
            unless lower == upper
        threshold: Nondecreasing comparison value
        lo: First index
        hi: Last index
        leaf_scan: Ranges at most this long are scanned index by index

    Returns:
        The number of hits

    Raises:
        PrecisionError: when the bounds straddle the threshold
    """
    bounds = lru_cache(maxsize=None)(bounds)
    threshold = lru_cache(maxsize=None)(threshold)
    total = 0
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        if a > b:
            continue
        if bounds(a)[0] >= threshold(b):
            continue
        if _below(bounds(b), threshold(a)):
            total += b - a + 1
            continue
        if b - a + 1 <= leaf_scan:
            for i in range(a, b + 1):
                bound = bounds(i)
                level = threshold(i)
                if _below(bound, level):
                    total += 1
                elif bound[0] < level:
                    raise PrecisionError(
                        f"cumulative distance at {i} straddles the alpha threshold"
                    )
            continue
        mid = (a + b) // 2
        stack.append((mid + 1, b))
        stack.append((a, mid))
    return total


class IntervalPairEngine:
    """Pair statistics for two-sided streams through the disagreement intervals.

    For the polynomial metric d(sigma^j x, sigma^j y) = 1/(1 + dist(j, D)), and for
    the geometric metric n^-dist(j, D), where D is the set of disagreement
    coordinates. D is known exactly on the realized range; outside it the upper
    bounds place sentinel disagreements just beyond both ends.
    """

    def __init__(
        self,
        x: SymbolStream,
        y: SymbolStream,
        metric: ShiftMetric,
        horizon: int,
        reach: Optional[int] = None,
    ):
        settings = get_settings()
        if x.side is not Side.TWO or y.side is not Side.TWO:
            raise DomainError("the interval pair engine compares two-sided streams")
        if horizon < 1:
            raise DomainError("horizon must be at least 1")
        self.metric = metric
        self.horizon = horizon
        self.reach = reach or max(horizon, settings.guard_depth)
        self.lo_index = -self.reach
        self.hi_index = horizon + self.reach
        # sums reach the size of the horizon; keep the relative slack far below one unit
        self.dps = max(settings.mp_dps, 2 * len(str(self.hi_index)) + 20)
        bx = as_block_stream(x, self.hi_index)
        by = as_block_stream(y, self.hi_index)
        self.intervals = self._intervals(bx, by, settings.pattern_cap)
        self._starts = [u for u, _ in self.intervals]
        self._alpha_counts: Dict[Tuple[AlphaFunction, Fraction], Tuple[int, int]] = {}

    def _intervals(self, bx: BlockStream, by: BlockStream, cap: int) -> List[Tuple[int, int]]:
        out: List[Tuple[int, int]] = []

        def add(u: int, v: int) -> None:
            if out and out[-1][1] + 1 >= u:
                out[-1] = (out[-1][0], max(out[-1][1], v))
            else:
                out.append((u, v))
            if len(out) > cap:
                raise BudgetError(f"more than {cap} disagreement intervals")

        for lo, hi, px, py in merged_zones(bx, by, self.lo_index, self.hi_index):
            if px.word == py.word and px.phase == py.phase:
                continue
            length = hi - lo + 1
            cycle = min(math.lcm(len(px.word), len(py.word)), length)
            mask = _disagreement_cycle(px.word, px.phase, py.word, py.phase, cycle)
            if not mask.any():
                continue
            if mask.all():
                add(lo, hi)
                continue
            edges = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(np.int8), [0]])))
            runs = list(zip(edges[0::2].tolist(), (edges[1::2] - 1).tolist()))
            base = lo
            while base <= hi:
                for u, v in runs:
                    if base + u > hi:
                        break
                    add(base + u, min(base + v, hi))
                base += cycle
        return out

    # distance profile ----------------------------------------------------

    def _kernel_sum(self, a: int, b: int) -> mpmath.mpf:
        """Sum of the distance kernel over distances a..b (a >= 1)."""
        if b < a:
            return mpmath.mpf(0)
        if self.metric.kind is MetricKind.POLYNOMIAL:
            return mpmath.harmonic(b + 1) - mpmath.harmonic(a)
        n = mpmath.mpf(self.metric.base)
        return (n ** (-a) - n ** (-(b + 1))) / (1 - 1 / n)

    def _gap_sum(self, left: Optional[int], right: Optional[int], a: int, b: int) -> mpmath.mpf:
        """Sum of kernel(dist(j, D)) for j in [a, b] lying strictly between D points left, right."""
        if b < a:
            return mpmath.mpf(0)
        if left is None and right is None:
            return mpmath.mpf(0)
        if left is None:
            return self._kernel_sum(right - b, right - a)
        if right is None:
            return self._kernel_sum(a - left, b - left)
        mid = (left + right) // 2
        total = mpmath.mpf(0)
        if a <= mid:
            total += self._kernel_sum(a - left, min(b, mid) - left)
        if b > mid:
            start = max(a, mid + 1)
            total += self._kernel_sum(right - b, right - start)
        return total

    def _profile_sum(self, intervals: List[Tuple[int, int]], a: int, b: int) -> mpmath.mpf:
        """Sum over j in [a, b] of the metric value at sigma^j, for disagreement `intervals`."""
        if b < a:
            return mpmath.mpf(0)
        total = mpmath.mpf(0)
        starts = [u for u, _ in intervals]
        k = bisect_right(starts, a) - 1
        cursor = a
        while cursor <= b:
            if k >= 0 and cursor <= intervals[k][1]:
                end = min(b, intervals[k][1])
                total += end - cursor + 1
                cursor = end + 1
                continue
            left = intervals[k][1] if k >= 0 else None
            right = intervals[k + 1][0] if k + 1 < len(intervals) else None
            end = b if right is None else min(b, right - 1)
            total += self._gap_sum(left, right, cursor, end)
            cursor = end + 1
            k += 1
        return total

    def _prefix_table(self, intervals: List[Tuple[int, int]]) -> Tuple[List[int], List[mpmath.mpf]]:
        """Interval ends v >= 0 and the profile sums over [0, v]."""
        ends: List[int] = []
        sums: List[mpmath.mpf] = []
        total = mpmath.mpf(0)
        cursor = 0
        for _, v in intervals:
            if v < 0:
                continue
            total += self._profile_sum(intervals, cursor, v)
            ends.append(v)
            sums.append(+total)
            cursor = v + 1
        return ends, sums

    def _sum_to(self, intervals: List[Tuple[int, int]], table, i: int) -> mpmath.mpf:
        """Profile sum over [0, i - 1], resuming from the last interval end before i."""
        ends, sums = table
        k = bisect_right(ends, i - 1) - 1
        if k < 0:
            return self._profile_sum(intervals, 0, i - 1)
        return sums[k] + self._profile_sum(intervals, ends[k] + 1, i - 1)

    @cached_property
    def _sentinels(self) -> List[Tuple[int, int]]:
        return [(self.lo_index - 1, self.lo_index - 1)] + self.intervals + [
            (self.hi_index + 1, self.hi_index + 1)
        ]

    @cached_property
    def _tables(self):
        with mpmath.workdps(self.dps):
            return self._prefix_table(self.intervals), self._prefix_table(self._sentinels)

    def cumulative(self, i: int) -> Tuple[mpmath.mpf, mpmath.mpf]:
        """Bounds on sum_{j=0}^{i-1} d(sigma^j x, sigma^j y); the sum lies strictly below the upper one."""
        if i < 0 or i > self.horizon:
            raise DomainError(f"i={i} outside [0, {self.horizon}]")
        exact, padded = self._tables
        with mpmath.workdps(self.dps):
            lo = self._sum_to(self.intervals, exact, i)
            hi = self._sum_to(self._sentinels, padded, i)
            slack = mpmath.mpf(10) ** (-(self.dps - 10)) * (len(self.intervals) + 2)
            return lo * (1 - slack), hi * (1 + slack) + slack

    def alpha_count(self, alpha: Callable[[int], Fraction], t: Fraction, n: int) -> int:
        t = Fraction(t)

        def threshold(i: int) -> mpmath.mpf:
            value = Fraction(alpha(i)) * t
            with mpmath.workdps(self.dps):
                return mpmath.mpf(value.numerator) / value.denominator

        # counts for a named alpha resume from the last n asked at the same t
        key = (alpha, t) if isinstance(alpha, AlphaFunction) else None
        done, count = self._alpha_counts.get(key, (0, 0)) if key else (0, 0)
        if n < done:
            done, count = 0, 0
        # each bound costs a few harmonic numbers; bisect down to single indices
        count += count_alpha_hits(self.cumulative, threshold, done + 1, n, 1)
        if key:
            self._alpha_counts[key] = (n, count)
        return count

    def close_radius(self, t: Fraction) -> Optional[int]:
        """Smallest distance to D that makes the pair t-close; None when every index is close."""
        t = Fraction(t)
        if t > 1:
            return None
        if self.metric.kind is MetricKind.POLYNOMIAL:
            return math.floor(1 / t - 1) + 1
        return m_epsilon(self.metric, t) + 1

    def close_count(self, t: Fraction, n: int) -> int:
        """#{0 <= i < n : dist(i, D) >= close radius}."""
        if n < 0 or n > self.horizon:
            raise DomainError(f"n={n} outside [0, {self.horizon}]")
        t = Fraction(t)
        if t <= 0:
            return 0
        r = self.close_radius(t)
        if r is None or n == 0:
            return n
        if r > self.reach:
            raise PrecisionError(f"close radius {r} exceeds realized reach {self.reach}")
        blocked = 0
        cursor = 0
        for u, v in self.intervals:
            a, b = max(u - r + 1, cursor), min(v + r - 1, n - 1)
            if b < a:
                if u - r + 1 > n - 1:
                    break
                continue
            blocked += b - a + 1
            cursor = b + 1
        return n - blocked

    def disagreement_intervals(self) -> List[Tuple[int, int]]:
        return list(self.intervals)


def pair_engine(x: SymbolStream, y: SymbolStream, metric: ShiftMetric, horizon: int):
    """Pick the engine matching the streams' sidedness."""
    if x.side is not y.side:
        raise DomainError("cannot compare one-sided and two-sided streams")
    if x.side is Side.ONE:
        return GeometricPairEngine(x, y, metric, horizon)
    return IntervalPairEngine(x, y, metric, horizon)
