"""Finitely described invariant measures, empirical measures and the weak* metric.

The weak* metric uses a fixed separating family: the indicators of all nonempty
cylinders at offset 1, listed length-lexicographically, the k-th weighted 2^-k.
"""

import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from mcp.server.fastmcp.utilities.logging import get_logger

from errors import BudgetError, DomainError, InvariantError
from settings import get_settings
from streams import count_windows, cyclic_windows
from symbolic import (
    Alphabet,
    CylinderObservable,
    Observable,
    ShiftMetric,
    SymbolStream,
    Word,
    format_word,
    m_epsilon,
    parse_word,
    separating_family,
)

logger = get_logger(__name__)


class FiniteMeasure(ABC):
    """A probability measure on the shift with an exactly computable cylinder mass."""

    alphabet_size: int

    @abstractmethod
    def distribution(self, length: int) -> Dict[Word, Fraction]:
        """Mass of every cylinder of the given length (zero-mass words omitted)."""

    def cylinder(self, word: Sequence[int]) -> Fraction:
        word = tuple(word)
        if not word:
            return Fraction(1)
        return self.distribution(len(word)).get(word, Fraction(0))

    def cylinder_at(self, word: Sequence[int], offset: int) -> Fraction:
        """Mass of the cylinder read at `offset`; shift-invariant kinds ignore the offset."""
        return self.cylinder(word)

    def integrate(self, phi: Union[Observable, CylinderObservable]) -> Fraction:
        """<phi, mu> for a cylinder indicator or a finite combination of them."""
        if isinstance(phi, CylinderObservable):
            return self.cylinder_at(phi.word, phi.offset)
        return sum(
            (c * self.cylinder_at(cyl.word, cyl.offset) for c, cyl in phi.terms if c),
            Fraction(0),
        )

    def support(self, depth: int) -> Set[Word]:
        """Words of length `depth` with positive mass."""
        if depth < 1:
            raise DomainError("support depth must be at least 1")
        return {w for w, mass in self.distribution(depth).items() if mass > 0}

    @abstractmethod
    def describe(self) -> Dict[str, object]:
        """JSON-friendly description."""


def _cyclic_window_counts(word: Word, length: int, n: int) -> Counter:
    """Histogram of the cyclic windows of a long word, through base-n window codes."""
    symbols = np.asarray(word, dtype=np.int64)
    codes = np.zeros(len(symbols), dtype=np.int64)
    for j in range(length):
        codes = codes * n + np.roll(symbols, -j)
    values, counts = np.unique(codes, return_counts=True)
    out: Counter = Counter()
    for code, k in zip(values.tolist(), counts.tolist()):
        digits = []
        for _ in range(length):
            code, digit = divmod(code, n)
            digits.append(digit)
        out[tuple(reversed(digits))] = k
    return out


@dataclass(frozen=True, eq=False)
class PeriodicMeasure(FiniteMeasure):
    """Uniform measure on the orbit of word^infinity."""

    word: Word
    alphabet_size: int
    _cache: Dict[int, Dict[Word, Fraction]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.word:
            raise DomainError("a periodic measure needs a nonempty word")
        Alphabet(self.alphabet_size).check(self.word)

    @property
    def canonical(self) -> Word:
        """Least rotation of the primitive root; equal measures share it."""
        p = len(self.word)
        root = self.word
        for d in range(1, p + 1):
            if p % d == 0 and self.word == self.word[:d] * (p // d):
                root = self.word[:d]
                break
        return min(root[r:] + root[:r] for r in range(len(root)))

    @property
    def is_fixed_point(self) -> bool:
        return len(self.canonical) == 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PeriodicMeasure):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash((self.alphabet_size, self.canonical))

    def distribution(self, length: int) -> Dict[Word, Fraction]:
        dist = self._cache.get(length)
        if dist is None:
            p = len(self.word)
            if p * length <= 4096 or self.alphabet_size**length >= 1 << 62:
                counts = Counter(cyclic_windows(self.word, length))
            else:
                counts = _cyclic_window_counts(self.word, length, self.alphabet_size)
            dist = {w: Fraction(k, p) for w, k in counts.items()}
            self._cache[length] = dist
        return dist

    def describe(self) -> Dict[str, object]:
        return {"periodic": format_word(self.word, self.alphabet_size)}


@dataclass(frozen=True, eq=False)
class ConvexMeasure(FiniteMeasure):
    """sum theta_i mu_i with exact nonnegative weights summing to 1."""

    terms: Tuple[Tuple[Fraction, FiniteMeasure], ...]
    _cache: Dict[int, Dict[Word, Fraction]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.terms:
            raise DomainError("a convex combination needs at least one term")
        sizes = {m.alphabet_size for _, m in self.terms}
        if len(sizes) != 1:
            raise DomainError("convex combination mixes alphabets")
        weights = [Fraction(w) for w, _ in self.terms]
        if any(w < 0 for w in weights):
            raise DomainError("convex weights must be nonnegative")
        if sum(weights) != 1:
            raise DomainError(f"convex weights sum to {sum(weights)}, not 1")
        object.__setattr__(
            self, "terms", tuple((w, m) for w, (_, m) in zip(weights, self.terms))
        )

    @property
    def alphabet_size(self) -> int:
        return self.terms[0][1].alphabet_size

    def distribution(self, length: int) -> Dict[Word, Fraction]:
        dist = self._cache.get(length)
        if dist is None:
            total: Dict[Word, Fraction] = {}
            for weight, measure in self.terms:
                if not weight:
                    continue
                for w, mass in measure.distribution(length).items():
                    total[w] = total.get(w, Fraction(0)) + weight * mass
            dist = {w: m for w, m in total.items() if m}
            self._cache[length] = dist
        return dist

    def cylinder_at(self, word: Sequence[int], offset: int) -> Fraction:
        return sum(
            (w * m.cylinder_at(word, offset) for w, m in self.terms if w), Fraction(0)
        )

    def describe(self) -> Dict[str, object]:
        return {"convex": [[str(w), m.describe()] for w, m in self.terms]}


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure(FiniteMeasure):
    """E_n(x) = (1/n) sum_{i<n} delta_{sigma^i x}, read on cylinders."""

    stream: SymbolStream
    n: int
    depth: int
    _cache: Dict[Tuple[int, int], Dict[Word, Fraction]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError("empirical measures need n >= 1")
        if self.depth < 1:
            raise DomainError("empirical depth must be at least 1")

    @property
    def alphabet_size(self) -> int:
        return self.stream.alphabet_size

    def _distribution_at(self, length: int, offset: int) -> Dict[Word, Fraction]:
        key = (length, offset)
        dist = self._cache.get(key)
        if dist is None:
            counts = count_windows(self.stream, length, offset, self.n + offset - 1)
            dist = {w: Fraction(k, self.n) for w, k in counts.items()}
            self._cache[key] = dist
        return dist

    def distribution(self, length: int) -> Dict[Word, Fraction]:
        return self._distribution_at(length, 1)

    def cylinder_at(self, word: Sequence[int], offset: int) -> Fraction:
        word = tuple(word)
        if not word:
            return Fraction(1)
        return self._distribution_at(len(word), offset).get(word, Fraction(0))

    def support(self, depth: Optional[int] = None) -> Set[Word]:
        return super().support(self.depth if depth is None else depth)

    def describe(self) -> Dict[str, object]:
        return {"empirical": {"n": self.n, "depth": self.depth}}


def periodic(word: Union[str, Sequence[int]], n: int) -> PeriodicMeasure:
    if isinstance(word, str):
        word = parse_word(word, n)
    return PeriodicMeasure(tuple(word), n)


def convex(terms: Sequence[Tuple[Fraction, FiniteMeasure]]) -> FiniteMeasure:
    """Convex combination; a single full-weight term is returned unchanged."""
    kept = [(Fraction(w), m) for w, m in terms]
    if len(kept) == 1 and kept[0][0] == 1:
        return kept[0][1]
    return ConvexMeasure(tuple(kept))


def empirical(x: SymbolStream, n: int, depth: int) -> EmpiricalMeasure:
    return EmpiricalMeasure(x, n, depth)


def parse_measure(spec, n: int) -> FiniteMeasure:
    """Parse {"periodic": "01"} or {"convex": [["1/2", {...}], ...]}."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise DomainError(f"measure literal must be a one-key object, got {spec!r}")
    (kind, body), = spec.items()
    if kind == "periodic":
        return periodic(str(body), n)
    if kind == "convex":
        try:
            terms = [(Fraction(str(w)), parse_measure(m, n)) for w, m in body]
        except (TypeError, ValueError) as exc:
            raise DomainError(f"bad convex literal: {exc}") from exc
        return convex(terms)
    raise DomainError(f"unknown measure kind '{kind}'")


def weak_star_distance(
    mu: FiniteMeasure, nu: FiniteMeasure, depth: Optional[int] = None
) -> Tuple[Fraction, Fraction]:
    """
    Truncated weak* distance under the length-lexicographic cylinder family.

    Args:
        mu: First measure
        nu: Second measure
        depth: Number K of family members summed (defaults to settings.truncation_depth)

    Returns:
        (value, error): the true distance lies in [value, value + error], error = 2^-K
    """
    K = depth or get_settings().truncation_depth
    if K < 1:
        raise DomainError("truncation depth must be at least 1")
    if mu.alphabet_size != nu.alphabet_size:
        raise DomainError("measures live on different alphabets")
    value = Fraction(0)
    weight = Fraction(1)
    for word in separating_family(mu.alphabet_size, K):
        weight /= 2
        value += weight * abs(mu.cylinder(word) - nu.cylinder(word))
    return value, Fraction(1, 2**K)


def support(mu: FiniteMeasure, depth: int) -> Set[Word]:
    return mu.support(depth)


def _family_words_up_to(n: int, m: int) -> int:
    """Number of nonempty words of length at most m over n symbols."""
    if n == 1:
        return m
    return (n ** (m + 1) - n) // (n - 1)


def measure_distance_bound(
    x: SymbolStream, y: SymbolStream, n: int, eps: Fraction, metric: ShiftMetric
) -> Tuple[Fraction, Fraction]:
    """
    Upper bound on the weak* distance of E_n(x) and E_n(y) from orbit closeness.

    If d(sigma^i x, sigma^i y) < eps for all but a fraction delta of i < n, the two
    empirical measures agree on every cylinder of length <= mEpsilon(eps) up to delta,
    so the distance is at most modulus(eps) + 2 delta, with modulus(eps) the family
    weight carried by longer cylinders.

    Returns:
        (bound, delta)
    """
    from pair_engine import pair_engine

    if n < 1:
        raise DomainError("n must be at least 1")
    engine = pair_engine(x, y, metric, n)
    close = engine.close_count(Fraction(eps), n)
    delta = Fraction(n - close, n)
    m = m_epsilon(metric, Fraction(eps))
    modulus = Fraction(1, 2 ** _family_words_up_to(metric.base, m))
    return modulus + 2 * delta, delta


@dataclass(frozen=True)
class ConvergenceBound:
    """d(E_n(w^infinity), periodic(w)) <= 2|w|/n for every n >= 1 and every phase."""

    word: Word

    def __call__(self, n: int) -> Fraction:
        if n < 1:
            raise DomainError("n must be at least 1")
        if len(set(self.word)) == 1:
            return Fraction(0)
        return Fraction(2 * len(self.word), n)

    def threshold(self, eps: Fraction) -> int:
        """Smallest N with bound(n) <= eps for all n >= N."""
        eps = Fraction(eps)
        if eps <= 0:
            raise DomainError("eps must be positive")
        if len(set(self.word)) == 1:
            return 1
        return max(1, math.ceil(Fraction(2 * len(self.word)) / eps))


def periodic_measure_convergence(word: Sequence[int]) -> ConvergenceBound:
    if not word:
        raise DomainError("empty cycle word")
    return ConvergenceBound(tuple(word))


# convex sets of measures --------------------------------------------------


class ConvexSet(ABC):
    """A compact connected set of measures parameterized by s in [0, 1]."""

    @abstractmethod
    def at(self, s: Fraction) -> FiniteMeasure:
        """The measure at parameter s."""

    @property
    @abstractmethod
    def extremes(self) -> Tuple[FiniteMeasure, ...]:
        """Extreme measures describing the set."""

    @property
    @abstractmethod
    def edge_count(self) -> int:
        """Number of linear pieces of the parameterization."""

    def edge_length(self, depth: Optional[int] = None) -> Fraction:
        """Largest truncated distance between the ends of a linear piece."""
        ends = list(self.extremes)
        if len(ends) < 2:
            return Fraction(0)
        pairs = list(zip(ends, ends[1:]))
        if self.edge_count > len(pairs):
            pairs.append((ends[-1], ends[0]))
        return max(weak_star_distance(a, b, depth)[0] for a, b in pairs)


@dataclass(frozen=True)
class Segment(ConvexSet):
    """conv{rho1, rho2}: point(theta) = theta rho1 + (1 - theta) rho2, at(s) = point(1 - s)."""

    rho1: FiniteMeasure
    rho2: FiniteMeasure

    def point(self, theta: Fraction) -> FiniteMeasure:
        theta = Fraction(theta)
        if not 0 <= theta <= 1:
            raise DomainError("segment parameter must lie in [0, 1]")
        if theta == 1:
            return self.rho1
        if theta == 0:
            return self.rho2
        return ConvexMeasure(((theta, self.rho1), (1 - theta, self.rho2)))

    def at(self, s: Fraction) -> FiniteMeasure:
        return self.point(1 - Fraction(s))

    @property
    def extremes(self) -> Tuple[FiniteMeasure, ...]:
        if self.rho1 is self.rho2 or self.rho1 == self.rho2:
            return (self.rho1,)
        return (self.rho1, self.rho2)

    @property
    def edge_count(self) -> int:
        return 1 if len(self.extremes) == 2 else 0

    def locate(self, mu: FiniteMeasure) -> Optional[Fraction]:
        """theta with mu = point(theta), when mu was declared on this segment."""
        if mu is self.rho1 or mu == self.rho1:
            return Fraction(1)
        if mu is self.rho2 or mu == self.rho2:
            return Fraction(0)
        if isinstance(mu, ConvexMeasure) and len(mu.terms) == 2:
            (w1, m1), (w2, m2) = mu.terms
            if (m1 is self.rho1 or m1 == self.rho1) and (m2 is self.rho2 or m2 == self.rho2):
                return w1
            if (m1 is self.rho2 or m1 == self.rho2) and (m2 is self.rho1 or m2 == self.rho1):
                return w2
        return None


@dataclass(frozen=True)
class Polygon(ConvexSet):
    """Closed polyline through the vertices; s runs once around it."""

    vertices: Tuple[FiniteMeasure, ...]

    def __post_init__(self) -> None:
        if not self.vertices:
            raise DomainError("a polygon needs at least one vertex")

    @property
    def extremes(self) -> Tuple[FiniteMeasure, ...]:
        return self.vertices

    @property
    def edge_count(self) -> int:
        v = len(self.vertices)
        return 0 if v == 1 else (1 if v == 2 else v)

    def at(self, s: Fraction) -> FiniteMeasure:
        s = Fraction(s)
        if not 0 <= s <= 1:
            raise DomainError("polygon parameter must lie in [0, 1]")
        edges = self.edge_count
        if edges == 0:
            return self.vertices[0]
        position = s * edges
        j = min(math.floor(position), edges - 1)
        local = position - j
        a = self.vertices[j]
        b = self.vertices[(j + 1) % len(self.vertices)]
        return Segment(a, b).at(local)


def as_convex_set(spec: Union[ConvexSet, Sequence[FiniteMeasure]]) -> ConvexSet:
    if isinstance(spec, ConvexSet):
        return spec
    vertices = tuple(spec)
    if len(vertices) == 2:
        return Segment(vertices[0], vertices[1])
    return Polygon(vertices)


# measure chains -------------------------------------------------------------


@dataclass(frozen=True)
class MeasureChain:
    points: Tuple[FiniteMeasure, ...]
    step_bound: Fraction
    steps: Tuple[Fraction, ...] = ()

    def __len__(self) -> int:
        return len(self.points)

    def verify(self, depth: Optional[int] = None) -> None:
        """Every truncated consecutive distance is within the step bound."""
        for a, b in zip(self.points, self.points[1:]):
            value, _ = weak_star_distance(a, b, depth)
            if value > self.step_bound:
                raise InvariantError(
                    f"chain step {value} exceeds the step bound {self.step_bound}"
                )


def chain_along(
    target: ConvexSet,
    start: Fraction,
    stop: Fraction,
    eps: Fraction,
    depth: Optional[int] = None,
) -> MeasureChain:
    """
    Equally spaced chain of parameters from `start` to `stop` on a convex set.

    On one linear piece d(at(s), at(s')) = |s - s'| edges d(piece ends), so
    ceil(|stop - start| edges diameter / eps) steps keep every step within eps.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    start, stop = Fraction(start), Fraction(stop)
    if start == stop or target.edge_count == 0:
        return MeasureChain((target.at(start),), eps, (start,))
    span = abs(stop - start) * target.edge_count * target.edge_length(depth)
    steps = max(1, math.ceil(span / eps))
    params = tuple(start + (stop - start) * Fraction(j, steps) for j in range(steps + 1))
    chain = MeasureChain(tuple(target.at(s) for s in params), eps, params)
    chain.verify(depth)
    return chain


def chain_between(
    mu: FiniteMeasure,
    nu: FiniteMeasure,
    eps: Fraction,
    segment: Segment,
    depth: Optional[int] = None,
) -> MeasureChain:
    """
    Equally spaced chain from mu to nu along a declared segment.

    The step count is ceil(|theta_mu - theta_nu| d(rho1, rho2) / eps), using
    d(point(a), point(b)) = |a - b| d(rho1, rho2).

    Raises:
        DomainError: if mu or nu is not a point of `segment`, or eps <= 0
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    a, b = segment.locate(mu), segment.locate(nu)
    if a is None or b is None:
        raise DomainError("measures are not on the declared segment")
    if a == b:
        return MeasureChain((mu,), eps)
    span, _ = weak_star_distance(segment.rho1, segment.rho2, depth)
    length = abs(a - b) * span
    steps = max(1, math.ceil(length / eps))
    thetas = [a + (b - a) * Fraction(j, steps) for j in range(steps + 1)]
    points = [mu] + [segment.point(t) for t in thetas[1:-1]] + [nu]
    chain = MeasureChain(tuple(points), eps, tuple(thetas))
    chain.verify(depth)
    logger.debug("measure chain: %d points, step %s", len(points), length / steps)
    return chain


class DenseSequence:
    """
    Boustrophedon dyadic enumeration of a convex set.

    Pass r walks the grid {i/2^r} forward or backward (alternating), skipping the
    point it shares with the previous pass, so every grid point recurs beyond any
    index and consecutive gaps shrink pass by pass.
    """

    def __init__(
        self,
        target: ConvexSet,
        envelope: Optional[Callable[[int], Fraction]] = None,
        depth: Optional[int] = None,
        max_resolution: int = 60,
    ):
        self.target = target
        self.envelope = envelope
        self.depth = depth
        self.max_resolution = max_resolution
        self.diameter = target.edge_length(depth)
        self._params: List[Fraction] = []
        self._gaps: List[Fraction] = []
        self._resolution = 0
        self._forward = True

    @property
    def trivial(self) -> bool:
        return self.target.edge_count == 0

    def _next_resolution(self) -> int:
        r = self._resolution + 1
        if self.envelope is None or self.trivial:
            return r
        while r <= self.max_resolution:
            end = len(self._params) + self.target.edge_count * 2**r
            if self.diameter / 2**r <= Fraction(self.envelope(end)):
                return r
            r += 1
        raise BudgetError("no dyadic refinement meets the gap envelope")

    def _extend(self) -> None:
        if self.trivial:
            self._params.append(Fraction(0))
            self._gaps.append(Fraction(0))
            return
        r = self._next_resolution()
        cells = 2**r
        grid = [Fraction(i, cells) for i in range(cells + 1)]
        if not self._forward:
            grid.reverse()
        if self._params:
            grid = grid[1:]
        step = self.diameter / 2**r
        for s in grid:
            self._gaps.append(step if self._params else Fraction(0))
            self._params.append(s)
        self._resolution = r
        self._forward = not self._forward

    def parameter(self, j: int) -> Fraction:
        """Parameter of the j-th point (1-based)."""
        if j < 1:
            raise DomainError("dense sequence indices start at 1")
        while len(self._params) < j:
            self._extend()
        return self._params[j - 1]

    def gap(self, j: int) -> Fraction:
        """Bound on d(alpha_j, alpha_{j+1}) from the pass resolution."""
        self.parameter(j + 1)
        return self._gaps[j]

    def __getitem__(self, j: int) -> FiniteMeasure:
        return self.target.at(self.parameter(j))

    def __iter__(self) -> Iterator[FiniteMeasure]:
        j = 1
        while True:
            yield self[j]
            j += 1

    def head(self, count: int) -> List[FiniteMeasure]:
        return [self[j] for j in range(1, count + 1)]


def dense_sequence_on(
    target: Union[ConvexSet, Sequence[FiniteMeasure]],
    envelope: Optional[Callable[[int], Fraction]] = None,
    depth: Optional[int] = None,
) -> DenseSequence:
    return DenseSequence(as_convex_set(target), envelope, depth)


# periodic approximation ------------------------------------------------------


def flatten_periodic(measure: FiniteMeasure) -> List[Tuple[Fraction, PeriodicMeasure]]:
    """Write a measure as a convex combination of periodic measures."""
    if isinstance(measure, PeriodicMeasure):
        return [(Fraction(1), measure)]
    if isinstance(measure, ConvexMeasure):
        out: List[Tuple[Fraction, PeriodicMeasure]] = []
        for weight, inner in measure.terms:
            if weight:
                out.extend((weight * w, m) for w, m in flatten_periodic(inner))
        return out
    raise DomainError("only periodic and convex measures have periodic approximations")


def shortest_bridge(model, u: Sequence[int], v: Sequence[int], limit: Optional[int] = None) -> Word:
    """The bridge of least length from u to v."""
    limit = limit if limit is not None else 4 * (model.n + 1) ** 2 + 64
    for gap in range(limit + 1):
        found = model.bridge(u, v, gap)
        if found is not None:
            return found
    raise BudgetError(f"no bridge of length <= {limit} between the given words")


def periodic_approximation(
    target: FiniteMeasure,
    eps: Fraction,
    model,
    depth: Optional[int] = None,
) -> PeriodicMeasure:
    """
    A periodic measure within eps of a convex combination of periodic measures.

    The cycle word concatenates w_i^{r_i} with shortest bridges between consecutive
    components; the repetition counts track the weights and are doubled until the
    truncated distance is at most eps.

    Raises:
        BudgetError: if the cycle word would exceed the explicit cap
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError("eps must be positive")
    merged: Dict[PeriodicMeasure, Fraction] = {}
    for w, m in flatten_periodic(target):
        if w > 0:
            merged[m] = merged.get(m, Fraction(0)) + w
    terms = [(w, PeriodicMeasure(m.canonical, m.alphabet_size)) for m, w in merged.items()]
    if len(terms) == 1 and model.cyclic_admissible(terms[0][1].word):
        return terms[0][1]
    bridges = [
        shortest_bridge(model, a.word, b.word)
        for (_, a), (_, b) in zip(terms, terms[1:] + terms[:1])
    ]
    cap = get_settings().explicit_cap
    overhead = sum(len(m.word) for _, m in terms) + sum(len(b) for b in bridges)
    scale = max(max(len(m.word) for _, m in terms) * len(terms) * 4, math.ceil(overhead / eps))
    while True:
        word: Tuple[int, ...] = ()
        for (weight, m), bridge in zip(terms, bridges):
            reps = max(1, round(weight * scale / len(m.word)))
            word += m.word * reps + bridge
        if len(word) > cap:
            raise BudgetError("periodic approximation exceeds the explicit cap")
        candidate = PeriodicMeasure(word, target.alphabet_size)
        value, _ = weak_star_distance(candidate, target, depth)
        if value <= eps:
            if not model.cyclic_admissible(word):
                raise InvariantError("periodic approximation left the model")
            logger.debug("periodic approximation: cycle length %d, distance %s", len(word), value)
            return candidate
        scale *= 2
