"""An alpha-scrambled family on the two-sided 2-shift under the polynomial metric.

Member x_xi is 0 at negative indices and on the quiet runs (d_{k-1}, c_k]; on the
stage-k blocks (c_k, d_k^1], (d_k^1, d_k^2], ..., (d_k^(k-1), d_k^k] it repeats the
symbol xi_l - 1. The quiet window [a_k, b_k] is placed where the harmonic tail of
all earlier disagreements stays below alpha(i + 1) / 2^k, so every pair is
alpha-close on most of [0, b_k]; the long stage-k blocks make pairs that differ in
xi_l disagree on most of [0, d_k^l].
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
from mcp.server.fastmcp.utilities.logging import get_logger

from alphas import AlphaFunction
from errors import BudgetError, DomainError, InvariantError
from settings import get_settings
from streams import BlockStream, BlockStreamBuilder
from symbolic import ShiftMetric, Side

logger = get_logger(__name__)

Prefix = Tuple[int, ...]

# grid on which alpha(n) / ln n must keep growing
PROXY_GRID: Tuple[int, ...] = tuple(10**k for k in range(3, 10))
PROXY_FLOOR = 2.0


def check_log_proxy(alpha: AlphaFunction, grid: Sequence[int] = PROXY_GRID) -> List[float]:
    """
    Finite stand-in for liminf alpha(n) / ln n = infinity.

    Returns:
        The ratios on the grid

    Raises:
        DomainError: naming the first grid point where the ratio stops growing or ends below the floor
    """
    ratios = [alpha.log_ratio(n) for n in grid]
    for n, before, after in zip(grid[1:], ratios, ratios[1:]):
        if after <= before:
            raise DomainError(
                f"alpha '{alpha.name}' fails the log-growth proxy at n={n}: "
                f"alpha(n)/ln n = {after:.4f} after {before:.4f}"
            )
    if ratios[-1] < PROXY_FLOOR:
        raise DomainError(
            f"alpha '{alpha.name}' fails the log-growth proxy at n={grid[-1]}: "
            f"alpha(n)/ln n = {ratios[-1]:.4f} < {PROXY_FLOOR}"
        )
    return ratios


@dataclass(frozen=True)
class PolynomialStage:
    k: int
    a: int
    b: int
    c: int
    d: Tuple[int, ...]
    quiet_from: int

    @property
    def end(self) -> int:
        return self.d[-1]

    def block(self, l: int) -> Tuple[int, int]:
        """Indices carrying xi_l in this stage."""
        lo = self.c if l == 1 else self.d[l - 2]
        return lo + 1, self.d[l - 1]

    def describe(self) -> dict:
        return {
            "k": self.k,
            "a": str(self.a),
            "b": str(self.b),
            "c": str(self.c),
            "d": [str(v) for v in self.d],
        }


def _harmonic_margin(alpha: AlphaFunction, stage: int, quiet_from: int, a: int, b: int) -> bool:
    """quiet_from + H(b - quiet_from + 1) <= alpha(a + 1) / scale, decided exactly on the integer part."""
    scale = 1 if stage == 1 else 2**stage
    room = alpha(a + 1) - scale * quiet_from
    if room <= 0:
        return False
    digits = max(get_settings().mp_dps, len(str(b)) + 20)
    with mpmath.workdps(digits):
        tail = scale * mpmath.harmonic(b - quiet_from + 1)
        return tail <= mpmath.mpf(room.numerator) / room.denominator


def _stretch(x: int, k: int) -> int:
    """x 2^k + 1, which gives (y - x) / y > 1 - 2^-k."""
    return x * 2**k + 1


def _first_quiet_start(alpha: AlphaFunction, k: int, quiet_from: int) -> int:
    """Least a > quiet_from meeting the harmonic margin on [a, a 2^k + 1], by doubling then bisection."""
    budget = get_settings().search_budget

    def ok(a: int) -> bool:
        return _harmonic_margin(alpha, k, quiet_from, a, _stretch(a, k))

    lo = quiet_from
    hi = max(quiet_from + 1, 1)
    steps = 0
    while not ok(hi):
        lo, hi = hi, 2 * hi
        steps += 1
        if steps > budget:
            raise BudgetError(f"no quiet window for stage {k} after {budget} doublings")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class PolynomialSchedule:
    alpha: AlphaFunction
    stages: List[PolynomialStage]

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    @property
    def last_time(self) -> int:
        return self.stages[-1].end if self.stages else 0

    def closeness_checkpoints(self) -> List[Tuple[int, int]]:
        """(k, b_k + 1): alpha-closeness is read over i in [1, b_k + 1]."""
        return [(s.k, s.b + 1) for s in self.stages]

    def separation_checkpoints(self, l: int) -> List[Tuple[int, int]]:
        """(k, d_k^l + 1) for every stage k >= l."""
        return [(s.k, s.d[l - 1] + 1) for s in self.stages if s.k >= l]

    def describe(self) -> dict:
        return {
            "alpha": self.alpha.name,
            "stages": [s.describe() for s in self.stages],
        }


def polynomial_schedule(alpha: AlphaFunction, stages: int) -> PolynomialSchedule:
    """
    Greedy stage times.

    Raises:
        DomainError: stages < 1, or alpha fails the log-growth proxy
        BudgetError: a quiet window could not be placed
    """
    if stages < 1:
        raise DomainError("the polynomial construction needs at least one stage")
    check_log_proxy(alpha)
    built: List[PolynomialStage] = []
    quiet_from = 0
    for k in range(1, stages + 1):
        a = _first_quiet_start(alpha, k, quiet_from)
        b = _stretch(a, k)
        c = 2 * b + 1
        d = [_stretch(c, k)]
        for _ in range(2, k + 1):
            d.append(_stretch(d[-1], k))
        stage = PolynomialStage(k, a, b, c, tuple(d), quiet_from)
        built.append(stage)
        logger.debug("polynomial stage %d: a has %d digits, d_k^k has %d", k, len(str(a)), len(str(stage.end)))
        quiet_from = stage.end
    schedule = PolynomialSchedule(alpha, built)
    verify_polynomial_schedule(schedule)
    return schedule


def verify_polynomial_schedule(schedule: PolynomialSchedule) -> int:
    """
    Re-check every defining inequality of every stage.

    Returns:
        Number of inequalities checked
    """
    checked = 0
    previous = 0
    for s in schedule.stages:
        k = s.k
        ratio = 1 - Fraction(1, 2**k)
        conditions = [
            (s.a > previous, "a_k > d_(k-1)"),
            (previous < s.a < s.b < s.c, "a < b < c"),
            (Fraction(s.b - s.a, s.b) > ratio, "(b - a) / b"),
            (s.c - s.b > s.b, "c - b > b"),
            (Fraction(s.d[0] - s.c, s.d[0]) > ratio, "(d^1 - c) / d^1"),
            (_harmonic_margin(schedule.alpha, k, s.quiet_from, s.a, s.b), "harmonic margin"),
        ]
        for lo, hi in zip(s.d, s.d[1:]):
            conditions.append((Fraction(hi - lo, hi) > ratio, "(d^l - d^(l-1)) / d^l"))
        for ok, name in conditions:
            if not ok:
                raise InvariantError(f"polynomial stage {k} violates {name}")
            checked += 1
        previous = s.end
    return checked


def normalize_polynomial_prefix(prefix: Union[str, Sequence[int]], stages: int) -> Prefix:
    symbols = tuple(int(ch) for ch in prefix) if isinstance(prefix, str) else tuple(prefix)
    if len(symbols) != stages or any(s not in (1, 2) for s in symbols):
        raise DomainError(f"prefix {prefix!r} is not a word of length {stages} over {{1, 2}}")
    return symbols


def polynomial_member(schedule: PolynomialSchedule, prefix: Prefix) -> BlockStream:
    """Two-sided member; everything after the last stage is 0."""
    builder = BlockStreamBuilder(2, Side.TWO, start=0)
    cursor_end = -1
    for s in schedule.stages:
        builder.append_periodic((0,), s.c - cursor_end)
        for l in range(1, s.k + 1):
            lo, hi = s.block(l)
            builder.append_periodic((prefix[l - 1] - 1,), hi - lo + 1)
        cursor_end = s.end
    builder.append_word((0,))
    return builder.build()


@dataclass
class PolynomialFamily:
    schedule: PolynomialSchedule
    members: Dict[Prefix, BlockStream]
    horizon: int
    metric: ShiftMetric = field(default_factory=ShiftMetric.polynomial)

    def member(self, prefix: Union[str, Sequence[int]]) -> BlockStream:
        key = normalize_polynomial_prefix(prefix, self.schedule.stage_count)
        if key not in self.members:
            raise DomainError(f"prefix {prefix!r} was not constructed")
        return self.members[key]

    def pairs(self) -> List[Tuple[Prefix, Prefix]]:
        keys = sorted(self.members)
        return [(u, v) for i, u in enumerate(keys) for v in keys[i + 1 :]]

    def first_difference(self, u: Prefix, v: Prefix) -> Optional[int]:
        for i, (p, q) in enumerate(zip(u, v), start=1):
            if p != q:
                return i
        return None

    def describe(self) -> dict:
        return {
            "members": ["".join(map(str, key)) for key in sorted(self.members)],
            "horizon": str(self.horizon),
            "side": Side.TWO.value,
            "metric": self.metric.kind.value,
            "schedule": self.schedule.describe(),
        }


def polynomial_construction(
    alpha: AlphaFunction,
    prefixes: Iterable[Union[str, Sequence[int]]],
    stages: Optional[int] = None,
    horizon: Optional[int] = None,
) -> PolynomialFamily:
    """
    Build the members x_xi for the requested prefixes.

    Args:
        alpha: Weight with alpha(n) / ln n growing on the proxy grid
        prefixes: Words over {1, 2}, all of length `stages`
        stages: Stage count (defaults to the prefix length, or 3 with no prefixes)
        horizon: Realized horizon (defaults to d_m^m)

    Returns:
        PolynomialFamily (empty when no prefixes are given)
    """
    raw = list(prefixes)
    if stages is None:
        stages = len(raw[0]) if raw else 3
    keys = sorted({normalize_polynomial_prefix(p, stages) for p in raw})
    schedule = polynomial_schedule(alpha, stages)
    horizon = schedule.last_time if horizon is None else horizon
    if horizon < schedule.last_time:
        raise DomainError("horizon ends before the last scheduled time")
    members = {key: polynomial_member(schedule, key) for key in keys}
    logger.info(
        "polynomial family: %d members, %d stages, last time has %d digits",
        len(members),
        stages,
        len(str(schedule.last_time)),
    )
    return PolynomialFamily(schedule, members, horizon)
