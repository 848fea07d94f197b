"""Alphabets, words, lazily realized symbol streams, shift metrics and cylinder observables."""

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import count, islice, product
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from errors import DomainError

Word = Tuple[int, ...]


class Side(str, Enum):
    ONE = "one-sided"
    TWO = "two-sided"


@dataclass(frozen=True)
class Alphabet:
    """Symbols 0..size-1."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise DomainError(f"alphabet size must be positive, got {self.size}")

    def check(self, word: Sequence[int]) -> Word:
        """Return `word` as a tuple, raising if a symbol is out of range."""
        for symbol in word:
            if not 0 <= symbol < self.size:
                raise DomainError(
                    f"symbol {symbol} outside alphabet of size {self.size}"
                )
        return tuple(word)

    def require_chaotic(self) -> None:
        if self.size < 2:
            raise DomainError("chaos constructions need at least two symbols")


def parse_word(text: str, n: int) -> Word:
    """
    Parse a serialized word.

    Args:
        text: Digit string for n <= 10, comma-separated integers otherwise
        n: Alphabet size

    Returns:
        The word as a tuple of symbols
    """
    text = text.strip()
    if not text:
        return ()
    if n <= 10 and "," not in text:
        symbols = [int(ch) for ch in text]
    else:
        symbols = [int(part) for part in text.split(",")]
    return Alphabet(n).check(symbols)


def format_word(word: Sequence[int], n: int) -> str:
    if n <= 10:
        return "".join(str(s) for s in word)
    return ",".join(str(s) for s in word)


def length_lex_words(n: int, max_length: Optional[int] = None) -> Iterator[Word]:
    """Nonempty words over n symbols in length-lexicographic order."""
    lengths = count(1) if max_length is None else range(1, max_length + 1)
    for length in lengths:
        yield from product(range(n), repeat=length)


def separating_family(n: int, depth: int) -> List[Word]:
    """The first `depth` cylinder words; the k-th carries weight 2^-k in the weak* metric."""
    return list(islice(length_lex_words(n), depth))


class SymbolStream(ABC):
    """A one- or two-sided symbol sequence realized on demand."""

    side: Side
    alphabet_size: int

    @abstractmethod
    def realize(self, i: int) -> int:
        """Symbol at index i (i >= 1 for one-sided streams)."""

    @property
    @abstractmethod
    def realized_depth(self) -> int:
        """Largest index materialized so far."""

    def check_index(self, i: int) -> None:
        if self.side is Side.ONE and i < 1:
            raise DomainError(f"one-sided streams are indexed from 1, got {i}")

    def window(self, lo: int, hi: int) -> Word:
        """Symbols at indices lo..hi-1."""
        return tuple(self.realize(i) for i in range(lo, hi))

    def shifted(self, k: int) -> "SymbolStream":
        return ShiftedStream(self, k)


class RuleStream(SymbolStream):
    """Stream defined by a total rule, memoized under a lock."""

    def __init__(
        self, rule: Callable[[int], int], alphabet_size: int, side: Side = Side.ONE
    ):
        self._rule = rule
        self.alphabet_size = alphabet_size
        self.side = side
        self._memo: Dict[int, int] = {}
        self._lock = threading.Lock()
        self._depth = 0

    def realize(self, i: int) -> int:
        self.check_index(i)
        cached = self._memo.get(i)
        if cached is not None:
            return cached
        value = self._rule(i)
        if not 0 <= value < self.alphabet_size:
            raise DomainError(f"rule produced symbol {value} at index {i}")
        with self._lock:
            self._memo.setdefault(i, value)
            self._depth = max(self._depth, abs(i))
        return value

    @property
    def realized_depth(self) -> int:
        return self._depth


class ShiftedStream(SymbolStream):
    """Lazy view realizing base.realize(i + k)."""

    def __init__(self, base: SymbolStream, k: int):
        self.base = base
        self.k = k
        self.side = base.side
        self.alphabet_size = base.alphabet_size

    def realize(self, i: int) -> int:
        self.check_index(i)
        return self.base.realize(i + self.k)

    @property
    def realized_depth(self) -> int:
        return max(0, self.base.realized_depth - self.k)

    def shifted(self, k: int) -> SymbolStream:
        return ShiftedStream(self.base, self.k + k)


def shift(x: SymbolStream, k: int) -> SymbolStream:
    """Realize sigma^k on `x` without copying realized data."""
    if x.side is Side.ONE and k < 0:
        raise DomainError("cannot shift a one-sided stream by a negative amount")
    if k == 0:
        return x
    return x.shifted(k)


class MetricKind(str, Enum):
    GEOMETRIC = "geometric"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class ShiftMetric:
    """Geometric metric n^-k, or the polynomial metric 1/(|m|+1) on two-sided {0,1} streams."""

    kind: MetricKind
    base: int = 2

    @classmethod
    def geometric(cls, n: int) -> "ShiftMetric":
        return cls(MetricKind.GEOMETRIC, n)

    @classmethod
    def polynomial(cls) -> "ShiftMetric":
        return cls(MetricKind.POLYNOMIAL, 2)

    def diameter(self, side: Side) -> Fraction:
        if self.kind is MetricKind.POLYNOMIAL or side is Side.TWO:
            return Fraction(1)
        return Fraction(1, self.base)


class DistanceValue(NamedTuple):
    value: Fraction
    certain: bool


def distance(
    x: SymbolStream, y: SymbolStream, metric: ShiftMetric, guard: int
) -> DistanceValue:
    """
    Distance between two streams, exact when the deciding disagreement lies within `guard`.

    Args:
        x: First stream
        y: Second stream
        metric: Metric to evaluate
        guard: Deepest coordinate (or |index|) inspected

    Returns:
        DistanceValue; when no disagreement is seen the guard bound with certain=False
    """
    if guard < 1:
        raise DomainError("guard must be at least 1")
    if x.side is not y.side:
        raise DomainError("cannot compare one-sided and two-sided streams")
    if metric.kind is MetricKind.POLYNOMIAL and x.side is not Side.TWO:
        raise DomainError("the polynomial metric is defined on two-sided streams")

    if x.side is Side.ONE:
        for k in range(1, guard + 1):
            if x.realize(k) != y.realize(k):
                return DistanceValue(Fraction(1, metric.base**k), True)
        return DistanceValue(Fraction(1, metric.base**guard), False)

    for k in range(0, guard + 1):
        if x.realize(k) != y.realize(k) or x.realize(-k) != y.realize(-k):
            if metric.kind is MetricKind.POLYNOMIAL:
                return DistanceValue(Fraction(1, k + 1), True)
            return DistanceValue(Fraction(1, metric.base**k), True)
    if metric.kind is MetricKind.POLYNOMIAL:
        return DistanceValue(Fraction(1, guard + 1), False)
    return DistanceValue(Fraction(1, metric.base**guard), False)


def m_epsilon(metric: ShiftMetric, eps: Fraction) -> int:
    """Largest m with n^-m >= eps: d < eps iff the first m coordinates agree."""
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    if metric.kind is not MetricKind.GEOMETRIC:
        raise DomainError("mEpsilon is defined for the geometric metric")
    if eps > 1:
        return 0
    m = 0
    power = metric.base
    while Fraction(1, power) >= eps:
        m += 1
        power *= metric.base
    return m


@dataclass(frozen=True)
class CylinderObservable:
    """Indicator that the stream reads `word` starting `offset - 1` places after the evaluation index."""

    word: Word
    offset: int = 1

    @property
    def depth(self) -> int:
        return self.offset - 1 + len(self.word)


@dataclass(frozen=True)
class Observable:
    """Finite linear combination of cylinder indicators."""

    terms: Tuple[Tuple[Fraction, CylinderObservable], ...] = field(default_factory=tuple)

    @classmethod
    def cylinder(cls, word: Sequence[int], offset: int = 1) -> "Observable":
        return cls(((Fraction(1), CylinderObservable(tuple(word), offset)),))

    @property
    def depth(self) -> int:
        return max((cyl.depth for _, cyl in self.terms), default=0)

    def lipschitz_weight(self, n: int) -> Fraction:
        """Sum of |coefficients|; bounds |<phi, mu> - <phi, nu>| per unit cylinder gap."""
        return sum((abs(c) for c, _ in self.terms), Fraction(0))


def evaluate_observable(
    phi, x: SymbolStream, at: int
) -> Fraction:
    """Value of phi(sigma^(at-1) x): the cylinder is read starting at index `at + offset - 1`."""
    if isinstance(phi, CylinderObservable):
        start = at + phi.offset - 1
        hit = all(x.realize(start + j) == s for j, s in enumerate(phi.word))
        return Fraction(int(hit))
    total = Fraction(0)
    for coefficient, cyl in phi.terms:
        if coefficient:
            total += coefficient * evaluate_observable(cyl, x, at)
    return total
