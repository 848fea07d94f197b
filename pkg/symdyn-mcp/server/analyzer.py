"""Finite-horizon chaos statistics: closeness fractions, DC1 verdicts, densities,
Birkhoff oscillation and recurrence evidence.

Every verdict is tied to the checkpoints and horizon it was read at; nothing here
claims an asymptotic statement.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import mpmath
import numpy as np
from mcp.server.fastmcp.utilities.logging import get_logger

from alphas import AlphaFunction
from errors import BudgetError, DomainError
from measures import empirical
from pair_engine import pair_engine
from settings import get_settings
from streams import count_window_series, count_windows
from symbolic import CylinderObservable, Observable, ShiftMetric, Side, SymbolStream, Word, m_epsilon

logger = get_logger(__name__)

Phi = Union[Observable, CylinderObservable]

# closeness fraction above which a tail reading counts as "never separated"
REFUTE_LEVEL = Fraction(99, 100)
TAIL_POINTS = 8


def _metric_for(x: SymbolStream, metric: Optional[ShiftMetric]) -> ShiftMetric:
    return metric or ShiftMetric.geometric(x.alphabet_size)


def _engine(x, y, n, metric):
    if n < 1:
        raise DomainError("n must be at least 1")
    return pair_engine(x, y, _metric_for(x, metric), n)


def phi_prefix(
    x: SymbolStream, y: SymbolStream, t, n: int, metric: Optional[ShiftMetric] = None
) -> Fraction:
    """(1/n) #{0 <= i < n : d(sigma^i x, sigma^i y) < t}."""
    return Fraction(_engine(x, y, n, metric).close_count(Fraction(t), n), n)


def phi_alpha_prefix(
    x: SymbolStream,
    y: SymbolStream,
    t,
    alpha: AlphaFunction,
    n: int,
    metric: Optional[ShiftMetric] = None,
) -> Fraction:
    """(1/n) #{1 <= i <= n : sum_{j<i} d(sigma^j x, sigma^j y) < alpha(i) t}."""
    return Fraction(_engine(x, y, n, metric).alpha_count(alpha, Fraction(t), n), n)


def cumulative_distance(
    x: SymbolStream, y: SymbolStream, n: int, metric: Optional[ShiftMetric] = None
) -> Tuple[Fraction, Fraction]:
    """Certified (lower, upper) bounds on sum_{j<n} d(sigma^j x, sigma^j y)."""
    lo, hi = _engine(x, y, n, metric).cumulative(n)
    if isinstance(lo, Fraction):
        return lo, hi
    # mpmath bounds from the interval engine, rounded outward
    scale = 10**30
    return (
        Fraction(int(mpmath.floor(lo * scale)), scale),
        Fraction(int(mpmath.ceil(hi * scale)), scale),
    )


@dataclass(frozen=True)
class ImplicationCheck:
    n: int
    t: Fraction
    eps2: Fraction
    alpha_fraction: Fraction
    plain_fraction: Fraction
    bound: Fraction
    applicable: bool

    @property
    def holds(self) -> bool:
        return not self.applicable or self.plain_fraction >= self.bound

    def describe(self) -> dict:
        return {
            "n": str(self.n),
            "t": str(self.t),
            "eps2": str(self.eps2),
            "alpha_fraction": str(self.alpha_fraction),
            "plain_fraction": str(self.plain_fraction),
            "bound": str(self.bound),
            "applicable": self.applicable,
            "holds": self.holds,
        }


def alpha_implies_plain(
    x: SymbolStream,
    y: SymbolStream,
    t,
    alpha: AlphaFunction,
    n: int,
    eps2=Fraction(1, 4),
    metric: Optional[ShiftMetric] = None,
) -> ImplicationCheck:
    """
    Finite alpha => plain check.

    With eps1 = 1 - (alpha-fraction at threshold alpha(i) t eps2), some hit i* >= (1 - eps1) n
    has fewer than eps2 i* far indices below it, so the plain fraction at t is at
    least 1 - eps1 - eps2. Needs alpha(n) <= (1 - eps1) n.
    """
    return _implication(_engine(x, y, n, metric), Fraction(t), alpha, n, Fraction(eps2))


def _implication(engine, t: Fraction, alpha: AlphaFunction, n: int, eps2: Fraction) -> ImplicationCheck:
    hits = engine.alpha_count(alpha, t * eps2, n)
    alpha_fraction = Fraction(hits, n)
    plain = Fraction(engine.close_count(t, n), n)
    eps1 = 1 - alpha_fraction
    applicable = hits > 0 and alpha(n) <= alpha_fraction * n
    return ImplicationCheck(n, t, eps2, alpha_fraction, plain, 1 - eps1 - eps2, applicable)


# verdicts ------------------------------------------------------------------


class Verdict(str, Enum):
    DC1 = "DC1-witnessed"
    ALPHA_DC1 = "alpha-DC1-witnessed"
    REFUTED = "refuted-at-horizon"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Checkpoint:
    """A time n with the bound the fraction must respect there; `t` is the level it is read at."""

    n: int
    bound: Fraction
    t: Optional[Fraction] = None
    stage: Optional[int] = None


@dataclass
class CheckRow:
    kind: str
    n: int
    t: Fraction
    value: Fraction
    bound: Fraction
    passed: bool
    stage: Optional[int] = None

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "stage": self.stage,
            "n": str(self.n),
            "t": str(self.t),
            "value": str(self.value),
            "bound": str(self.bound),
            "passed": self.passed,
        }


@dataclass
class ChaosReport:
    pair: str
    t0: Fraction
    t_grid: List[Fraction]
    horizon: int
    verdict: Verdict
    rows: List[CheckRow] = field(default_factory=list)
    implications: List[ImplicationCheck] = field(default_factory=list)
    alpha: Optional[str] = None

    @property
    def witness_times(self) -> List[int]:
        return sorted({r.n for r in self.rows if r.passed and r.kind != "tail"})

    def to_dict(self) -> dict:
        return {
            "pair": self.pair,
            "t0": str(self.t0),
            "t_grid": [str(t) for t in self.t_grid],
            "horizon": str(self.horizon),
            "alpha": self.alpha,
            "verdict": self.verdict.value,
            "witness_times": [str(n) for n in self.witness_times],
            "rows": [r.describe() for r in self.rows],
            "implications": [c.describe() for c in self.implications],
        }

    def csv_rows(self) -> List[List[str]]:
        header = ["pair", "kind", "stage", "n", "t", "value", "bound", "passed"]
        body = [
            [self.pair, r.kind, "" if r.stage is None else str(r.stage), str(r.n), str(r.t),
             str(r.value), str(r.bound), str(r.passed).lower()]
            for r in self.rows
        ]
        return [header] + body


def default_t_grid(t0: Fraction, diameter: Fraction, extra: Iterable = ()) -> List[Fraction]:
    grid = {Fraction(t0), diameter / 2, Fraction(diameter)} | {Fraction(t) for t in extra}
    return sorted(t for t in grid if t > 0)


def _tail_times(horizon: int) -> List[int]:
    """TAIL_POINTS times spread over [horizon / 2, horizon]."""
    lo = max(1, horizon // 2)
    if horizon - lo < TAIL_POINTS:
        return list(range(lo, horizon + 1))
    step = (horizon - lo) // (TAIL_POINTS - 1)
    return sorted({lo + j * step for j in range(TAIL_POINTS - 1)} | {horizon})


def dc1_verdict(
    x: SymbolStream,
    y: SymbolStream,
    t0,
    t_grid: Sequence,
    separation: Sequence[Checkpoint],
    closeness: Sequence[Checkpoint],
    horizon: int,
    alpha: Optional[AlphaFunction] = None,
    metric: Optional[ShiftMetric] = None,
    pair: str = "x|y",
) -> ChaosReport:
    """
    Read the DC1 (or alpha-DC1) shadow of a pair at its checkpoints.

    Separation checkpoints need phi_prefix(t0) <= bound. Closeness checkpoints need
    phi_prefix (or phi_alpha_prefix) >= 1 - bound at every grid t that is at least the
    checkpoint's own level; every grid t has to be covered by some checkpoint.
    The pair is refuted at the horizon when the closeness fraction stays above
    REFUTE_LEVEL at every tail time and every level.

    Returns:
        ChaosReport
    """
    t0 = Fraction(t0)
    grid = sorted({Fraction(t) for t in t_grid})
    for cp in list(separation) + list(closeness):
        if cp.n > horizon:
            raise DomainError(f"checkpoint {cp.n} lies beyond the horizon {horizon}")
    engine = _engine(x, y, horizon, metric)
    rows: List[CheckRow] = []

    tail_ok = True
    for n in _tail_times(horizon):
        for t in sorted(set(grid) | {t0}):
            value = Fraction(engine.close_count(t, n), n)
            ok = value >= REFUTE_LEVEL
            tail_ok = tail_ok and ok
            rows.append(CheckRow("tail", n, t, value, REFUTE_LEVEL, ok))
    if tail_ok:
        logger.info("pair %s refuted at horizon %d digits", pair, len(str(horizon)))
        return ChaosReport(pair, t0, grid, horizon, Verdict.REFUTED, rows, alpha=alpha.name if alpha else None)

    separated = bool(separation)
    for cp in separation:
        level = cp.t if cp.t is not None else t0
        value = Fraction(engine.close_count(level, cp.n), cp.n)
        ok = value <= cp.bound
        separated = separated and ok
        rows.append(CheckRow("separation", cp.n, level, value, cp.bound, ok, cp.stage))

    covered: Set[Fraction] = set()
    close = bool(closeness)
    implications: List[ImplicationCheck] = []
    for cp in closeness:
        for t in grid:
            if cp.t is not None and t < cp.t:
                continue
            covered.add(t)
            if alpha is None:
                value = Fraction(engine.close_count(t, cp.n), cp.n)
            else:
                value = Fraction(engine.alpha_count(alpha, t, cp.n), cp.n)
                implications.append(_implication(engine, t, alpha, cp.n, Fraction(1, 4)))
            ok = value >= 1 - cp.bound
            close = close and ok
            rows.append(CheckRow("alpha-closeness" if alpha else "closeness", cp.n, t, value, cp.bound, ok, cp.stage))
    close = close and covered == set(grid)

    if separated and close and all(c.holds for c in implications):
        verdict = Verdict.ALPHA_DC1 if alpha else Verdict.DC1
    else:
        verdict = Verdict.INCONCLUSIVE
        logger.warning("pair %s: verdict inconclusive at the given checkpoints", pair)
    return ChaosReport(
        pair, t0, grid, horizon, verdict, rows, implications, alpha.name if alpha else None
    )


def family_checkpoints(family, u, v) -> Tuple[Fraction, List[Checkpoint], List[Checkpoint]]:
    """
    Checkpoints a scramble family promises for members u, v.

    Returns:
        (t0, separation checkpoints, closeness checkpoints)
    """
    schedule = family.schedule
    group = family.first_difference(u, v)
    separation: List[Checkpoint] = []
    closeness: List[Checkpoint] = []
    for k in range(1, schedule.stage_count + 1):
        stage = schedule.stage(k)
        closeness.append(Checkpoint(schedule.closeness_checkpoint(k), stage.delta, 4 * stage.eps, k))
        if group is not None and group <= k:
            _, b = schedule.separation_window(group, k)
            separation.append(Checkpoint(b, 2 * stage.delta, family.zeta - 5 * stage.eps, k))
    return family.t0(), separation, closeness


def family_report(
    family,
    u,
    v,
    alpha: Optional[AlphaFunction] = None,
    t_grid: Optional[Sequence] = None,
) -> ChaosReport:
    """dc1_verdict of two members of a scramble family at the schedule's checkpoints."""
    key_u = tuple(int(c) for c in u)
    key_v = tuple(int(c) for c in v)
    t0, separation, closeness = family_checkpoints(family, key_u, key_v)
    diameter = family.model.metric.diameter(family.side)
    grid = list(t_grid) if t_grid is not None else default_t_grid(t0, diameter)
    horizon = max(cp.n for cp in separation + closeness)
    return dc1_verdict(
        family.members[key_u],
        family.members[key_v],
        t0,
        grid,
        separation,
        closeness,
        horizon,
        alpha=alpha,
        pair=f"{''.join(map(str, key_u))}|{''.join(map(str, key_v))}",
    )


def polynomial_level(stage: int) -> Fraction:
    """The closeness level a polynomial stage guarantees: 1 for stage 1, 2^-k after."""
    return Fraction(1) if stage == 1 else Fraction(1, 2**stage)


def polynomial_checkpoints(family, u, v) -> Tuple[List[Checkpoint], List[Checkpoint]]:
    """
    Checkpoints of a polynomial family for members u, v.

    alpha-closeness at b_k + 1 with bound 2^-k and level polynomial_level(k); separation
    at d_k^l + 1 (l the first differing symbol) with bound 2^(1-k) at t = 1.
    """
    schedule = family.schedule
    group = family.first_difference(u, v)
    closeness = [
        Checkpoint(n, Fraction(1, 2**k), polynomial_level(k), k)
        for k, n in schedule.closeness_checkpoints()
    ]
    separation = []
    if group is not None:
        separation = [
            Checkpoint(n, Fraction(2, 2**k), Fraction(1), k)
            for k, n in schedule.separation_checkpoints(group)
        ]
    return separation, closeness


def polynomial_report(family, u, v) -> ChaosReport:
    """alpha-DC1 shadow of two members of a polynomial family under the polynomial metric."""
    key_u = tuple(int(c) for c in u)
    key_v = tuple(int(c) for c in v)
    separation, closeness = polynomial_checkpoints(family, key_u, key_v)
    grid = sorted({cp.t for cp in closeness})
    horizon = max(cp.n for cp in separation + closeness)
    return dc1_verdict(
        family.members[key_u],
        family.members[key_v],
        Fraction(1),
        grid,
        separation,
        closeness,
        horizon,
        alpha=family.schedule.alpha,
        metric=family.metric,
        pair=f"{''.join(map(str, key_u))}|{''.join(map(str, key_v))}",
    )


# densities -----------------------------------------------------------------


@dataclass(frozen=True)
class DensityProfile:
    upper: Fraction
    lower: Fraction
    banach_upper: Fraction
    banach_lower: Fraction
    window_floor: int
    horizon: int
    count: int

    @property
    def chain_holds(self) -> bool:
        return self.banach_lower <= self.lower <= self.upper <= self.banach_upper

    def describe(self) -> dict:
        return {
            "upper": str(self.upper),
            "lower": str(self.lower),
            "banach_upper": str(self.banach_upper),
            "banach_lower": str(self.banach_lower),
            "window_floor": self.window_floor,
            "horizon": self.horizon,
            "count": self.count,
        }


def indicator_profile(indicator: np.ndarray, window_floor: Optional[int] = None) -> DensityProfile:
    """
    Densities of the visit set whose 0/1 indicator over [1, N] is given.

    Prefix densities run over every length n in [max(W, N/4), N], W the window floor.
    Banach densities are the extrema over every window of length at least W, which
    windows of length W .. 2W - 1 already attain.
    """
    N = int(indicator.size)
    if N < 1:
        raise DomainError("densities need a horizon of at least 1")
    if N >= 1 << 26:
        raise BudgetError(f"density horizon {N} must stay below 2^26")
    W = min(window_floor or get_settings().window_floor, N)
    prefix = np.concatenate([[0], np.cumsum(indicator.astype(np.int64))])

    first = max(W, -(-N // 4))
    lengths = np.arange(first, N + 1)
    # below 2^26 distinct ratios differ by more than a float rounding step
    ratios = prefix[first:] / lengths
    hi_n, lo_n = int(lengths[ratios.argmax()]), int(lengths[ratios.argmin()])

    upper_b: Optional[Fraction] = None
    lower_b: Optional[Fraction] = None
    for L in range(W, min(2 * W - 1, N) + 1):
        counts = prefix[L:] - prefix[:-L]
        hi, lo = Fraction(int(counts.max()), L), Fraction(int(counts.min()), L)
        upper_b = hi if upper_b is None else max(upper_b, hi)
        lower_b = lo if lower_b is None else min(lower_b, lo)
    return DensityProfile(
        Fraction(int(prefix[hi_n]), hi_n),
        Fraction(int(prefix[lo_n]), lo_n),
        upper_b,
        lower_b,
        W,
        N,
        int(prefix[-1]),
    )


def densities(visits: Sequence[int], horizon: int, window_floor: Optional[int] = None) -> DensityProfile:
    """DensityProfile of a set of visit times inside [1, horizon]."""
    if horizon > get_settings().explicit_cap:
        raise BudgetError(f"explicit density horizon {horizon} exceeds cap {get_settings().explicit_cap}")
    indicator = np.zeros(horizon, dtype=np.int8)
    times = np.asarray(sorted(set(visits)), dtype=np.int64)
    if times.size and (times[0] < 1 or times[-1] > horizon):
        raise DomainError(f"visit times must lie in [1, {horizon}]")
    indicator[times - 1] = 1
    return indicator_profile(indicator, window_floor)


# Birkhoff averages ---------------------------------------------------------


@dataclass(frozen=True)
class BirkhoffReport:
    averages: Tuple[Tuple[int, Fraction], ...]
    liminf: Fraction
    limsup: Fraction
    verdict: str

    def describe(self) -> dict:
        return {
            "averages": [[str(n), str(v)] for n, v in self.averages],
            "liminf": str(self.liminf),
            "limsup": str(self.limsup),
            "verdict": self.verdict,
        }


def birkhoff_averages(x: SymbolStream, phi: Phi, n_grid: Sequence[int]) -> List[Tuple[int, Fraction]]:
    """(1/n) sum_{i<n} phi(sigma^i x) at each grid point."""
    depth = max(phi.depth, 1)
    return [(n, empirical(x, n, depth).integrate(phi)) for n in n_grid]


def birkhoff_oscillation(
    x: SymbolStream,
    phi: Phi,
    n_grid: Sequence[int],
    a=None,
    b=None,
    tol=Fraction(1, 20),
) -> BirkhoffReport:
    """
    Running averages at the grid and min/max over its tail half.

    The verdict is "irregular" when the estimates land within tol of declared levels
    a < b, "regular" when they sit within tol of each other, otherwise "oscillating".
    """
    grid = sorted(set(n_grid))
    if not grid or grid[0] < 1:
        raise DomainError("the Birkhoff grid needs positive times")
    averages = birkhoff_averages(x, phi, grid)
    tail = [v for _, v in averages[len(averages) // 2 :]]
    low, high = min(tail), max(tail)
    tol = Fraction(tol)
    if a is not None and b is not None and Fraction(a) < Fraction(b) \
            and abs(low - Fraction(a)) <= tol and abs(high - Fraction(b)) <= tol:
        verdict = "irregular"
    elif high - low <= tol:
        verdict = "regular"
    else:
        verdict = "oscillating"
    return BirkhoffReport(tuple(averages), low, high, verdict)


# recurrence ----------------------------------------------------------------


@dataclass
class RecurrenceRow:
    eps: Fraction
    depth: int
    prefix_upper: Fraction
    prefix_lower: Fraction
    profile: DensityProfile
    grid_counts: Dict[int, int]

    def describe(self) -> dict:
        return {
            "eps": str(self.eps),
            "depth": self.depth,
            "prefix_upper": str(self.prefix_upper),
            "prefix_lower": str(self.prefix_lower),
            "explicit": self.profile.describe(),
            "grid_counts": {str(n): c for n, c in self.grid_counts.items()},
        }


@dataclass
class RecurrenceProfile:
    rows: List[RecurrenceRow]
    support_words: Set[Word]
    tail_words: Set[Word]
    horizon: int

    @property
    def support_in_tail(self) -> bool:
        return self.support_words <= self.tail_words

    def describe(self) -> dict:
        return {
            "horizon": str(self.horizon),
            "rows": [r.describe() for r in self.rows],
            "support_words": len(self.support_words),
            "tail_words": len(self.tail_words),
            "support_in_tail": self.support_in_tail,
        }


def visit_indicator(x: SymbolStream, m: int, horizon: int) -> np.ndarray:
    """1 at i in [1, horizon] iff x[i+1 .. i+m] = x[1 .. m]."""
    cap = get_settings().explicit_cap
    if horizon + m > cap:
        raise BudgetError(f"explicit realization of {horizon + m} symbols exceeds cap {cap}")
    data = np.asarray(x.window(1, horizon + m + 1), dtype=np.int64)
    if m == 0:
        return np.ones(horizon, dtype=np.int8)
    windows = np.lib.stride_tricks.sliding_window_view(data, m)
    return np.all(windows[1 : horizon + 1] == data[:m], axis=1).astype(np.int8)


def recurrence_profile(
    x: SymbolStream,
    eps_grid: Sequence,
    horizon: int,
    checkpoints: Optional[Sequence[int]] = None,
    window_floor: Optional[int] = None,
) -> RecurrenceProfile:
    """
    Evidence for the recurrence class of x.

    For each eps, the visit set N(x, B(x, eps)) is counted exactly at the checkpoint
    grid through block window counts (prefix densities), and explicitly on the
    first min(horizon, explicit_cap / 2) times (Banach densities).

    Args:
        x: One-sided stream realized to the horizon
        eps_grid: Ball radii
        horizon: Last time considered
        checkpoints: Times for the prefix densities (defaults to 16 points spread over the horizon)
        window_floor: Banach window floor
    """
    if x.side is not Side.ONE:
        raise DomainError("recurrence profiles read one-sided streams")
    if horizon < 2:
        raise DomainError("recurrence profiles need a horizon of at least 2")
    metric = ShiftMetric.geometric(x.alphabet_size)
    grid = sorted(set(checkpoints or [max(1, horizon * j // 16) for j in range(1, 17)]))
    if grid[-1] > horizon:
        raise DomainError("checkpoints beyond the horizon")
    explicit = min(horizon, get_settings().explicit_cap // 2)

    rows: List[RecurrenceRow] = []
    deepest = 1
    for eps in sorted({Fraction(e) for e in eps_grid}, reverse=True):
        m = m_epsilon(metric, eps)
        deepest = max(deepest, m)
        word = x.window(1, m + 1)
        if m == 0:
            counts = {n: n for n in grid}
        else:
            # visits at i are window starts i + 1
            series = count_window_series(x, m, [n + 1 for n in grid], start=2)
            counts = {n: series[n + 1].get(word, 0) for n in grid}
        ratios = [Fraction(c, n) for n, c in counts.items()]
        tail = ratios[len(ratios) // 2 :]
        profile = indicator_profile(visit_indicator(x, m, explicit), window_floor)
        rows.append(RecurrenceRow(eps, m, max(ratios), min(tail), profile, counts))

    support: Set[Word] = set()
    for n in grid:
        support |= empirical(x, n, deepest).support(deepest)
    tail_words = set(count_windows(x, deepest, max(1, horizon // 2), horizon))
    return RecurrenceProfile(rows, support, tail_words, horizon)
