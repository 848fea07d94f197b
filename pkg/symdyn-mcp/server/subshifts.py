"""Full shifts, subshifts of finite type and sofic shifts.

Every model answers the same questions: which words are admissible, how to
bridge two admissible words with a gap of prescribed length, and whether the
model mixes (and how fast). Transition systems additionally expose their
period and cyclic classes.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from mcp.server.fastmcp.utilities.logging import get_logger

from errors import CapabilityError, DomainError
from symbolic import Alphabet, ShiftMetric, Word, m_epsilon

logger = get_logger(__name__)


class ShiftModel(ABC):
    """A subshift described by its language."""

    kind: str
    alphabet: Alphabet

    @property
    def n(self) -> int:
        return self.alphabet.size

    @property
    def metric(self) -> ShiftMetric:
        return ShiftMetric.geometric(self.n)

    @abstractmethod
    def admissible(self, word: Sequence[int]) -> bool:
        """True iff `word` occurs in some point of the subshift."""

    @abstractmethod
    def bridge(self, u: Sequence[int], v: Sequence[int], gap: int) -> Optional[Word]:
        """A word w of length `gap` with u w v admissible, or None."""

    @abstractmethod
    def cyclic_admissible(self, word: Sequence[int]) -> bool:
        """True iff the periodic point word^infinity lies in the subshift."""

    @abstractmethod
    def is_mixing(self) -> bool:
        """True iff the model is topologically mixing."""

    @abstractmethod
    def specification_constant(self, eps: Fraction) -> int:
        """A gap K_eps after which any separated segments can be traced within eps."""

    def extensions(self, word: Word) -> List[int]:
        return [a for a in range(self.n) if self.admissible(word + (a,))]

    def words(self, length: int) -> List[Word]:
        """All admissible words of `length`, in lexicographic order."""
        if length < 0:
            raise DomainError("word length must be nonnegative")
        out: List[Word] = []
        stack: List[Word] = [()]
        while stack:
            word = stack.pop()
            if len(word) == length:
                out.append(word)
                continue
            for a in reversed(self.extensions(word)):
                stack.append(word + (a,))
        return out

    def check_word(self, word: Sequence[int]) -> Word:
        word = self.alphabet.check(word)
        if not self.admissible(word):
            raise DomainError(f"word {word} is not admissible in the {self.kind} model")
        return word

    def describe(self) -> Dict[str, object]:
        return {"kind": self.kind, "n": self.n}


@dataclass(frozen=True)
class PeriodicDecomposition:
    """Cyclically permuted symbol classes D_0, ..., D_{p-1}."""

    classes: Tuple[FrozenSet[int], ...]

    @property
    def period(self) -> int:
        return len(self.classes)

    def class_of(self, symbol: int) -> int:
        for k, members in enumerate(self.classes):
            if symbol in members:
                return k
        raise DomainError(f"symbol {symbol} is not in any cyclic class")

    def as_lists(self) -> List[List[int]]:
        return [sorted(members) for members in self.classes]


def _boolean_power_positive(matrix: np.ndarray, cap: int) -> Optional[int]:
    """Smallest N <= cap with matrix^N strictly positive."""
    if matrix.size == 0:
        return None
    a = (matrix > 0).astype(np.int64)
    power = a.copy()
    for exponent in range(1, cap + 1):
        if power.all():
            return exponent
        power = ((power @ a) > 0).astype(np.int64)
    return None


def wielandt_bound(k: int) -> int:
    """Exponent after which a k x k primitive matrix is positive."""
    return (k - 1) ** 2 + 1


class TransitionSystem(ShiftModel):
    """One-step SFT: matrix[i][j] = 1 iff symbol j may follow symbol i."""

    def __init__(self, matrix: Sequence[Sequence[int]], kind: str = "sft"):
        array = np.asarray(matrix, dtype=np.int64)
        if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
            raise DomainError("transition matrix must be square and nonempty")
        if not np.isin(array, (0, 1)).all():
            raise DomainError("transition matrix entries must be 0 or 1")
        self.matrix = array
        self.alphabet = Alphabet(array.shape[0])
        self.kind = kind
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(range(self.n))
        self.graph.add_edges_from(zip(*(axis.tolist() for axis in np.nonzero(array))))
        self.essential = self._essential_symbols()
        if not self.essential:
            raise DomainError("transition matrix admits no infinite path")

    @classmethod
    def full(cls, n: int) -> "TransitionSystem":
        return cls(np.ones((n, n), dtype=np.int64), kind="full")

    @classmethod
    def golden_mean(cls) -> "TransitionSystem":
        return cls([[1, 1], [1, 0]])

    def _essential_symbols(self) -> FrozenSet[int]:
        """Symbols starting arbitrarily long paths; every usable symbol has a successor here."""
        alive = set(range(self.n))
        while True:
            dead = {s for s in alive if not any(t in alive for t in self.graph.successors(s))}
            if not dead:
                return frozenset(alive)
            alive -= dead

    @cached_property
    def essential_list(self) -> List[int]:
        return sorted(self.essential)

    @cached_property
    def essential_matrix(self) -> np.ndarray:
        idx = self.essential_list
        return self.matrix[np.ix_(idx, idx)]

    def admissible(self, word: Sequence[int]) -> bool:
        if any(not 0 <= s < self.n or s not in self.essential for s in word):
            return False
        return all(self.matrix[a, b] for a, b in zip(word, word[1:]))

    def extensions(self, word: Word) -> List[int]:
        if not word:
            return self.essential_list
        if not self.admissible(word):
            return []
        last = word[-1]
        return [b for b in self.essential_list if self.matrix[last, b]]

    def cyclic_admissible(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        return bool(word) and self.admissible(word + word[:1])

    def bridge(self, u: Sequence[int], v: Sequence[int], gap: int) -> Optional[Word]:
        if gap < 0:
            raise DomainError("gap must be nonnegative")
        u, v = tuple(u), tuple(v)
        if not self.admissible(u) or not self.admissible(v):
            raise DomainError("bridge endpoints must be admissible")
        ess = np.zeros(self.n, dtype=bool)
        ess[self.essential_list] = True
        adj = self.matrix > 0

        # reach[k]: symbols that can be followed by k more symbols and then land on v[0]
        target = np.zeros(self.n, dtype=bool)
        if v:
            target[v[0]] = True
        else:
            target = ess.copy()
        reach = [target]
        steps = gap if v else gap - 1
        for _ in range(max(steps, 0)):
            reach.append(ess & (adj.astype(np.int64) @ reach[-1].astype(np.int64) > 0))

        if gap == 0:
            if u and v and not adj[u[-1], v[0]]:
                return None
            return ()

        out: List[int] = []
        current = u[-1] if u else None
        for j in range(1, gap + 1):
            remaining = gap - j
            allowed = reach[remaining + 1] if v else reach[remaining]
            candidates = np.flatnonzero(allowed if current is None else allowed & adj[current])
            if candidates.size == 0:
                return None
            current = int(candidates[0])
            out.append(current)
        return tuple(out)

    def primitivity_index(self, cap: Optional[int] = None) -> Optional[int]:
        """Smallest N <= cap with A^N > 0 on the essential symbols, else None."""
        k = len(self.essential)
        cap = cap if cap is not None else wielandt_bound(k)
        if cap < 1:
            raise DomainError("cap must be at least 1")
        return _boolean_power_positive(self.essential_matrix, cap)

    def is_mixing(self) -> bool:
        return self.primitivity_index() is not None

    def is_transitive(self) -> bool:
        return nx.is_strongly_connected(self.graph.subgraph(self.essential))

    def _levels(self) -> Dict[int, int]:
        if not self.is_transitive():
            raise DomainError("transition system is not transitive on its usable symbols")
        root = self.essential_list[0]
        return nx.single_source_shortest_path_length(self.graph.subgraph(self.essential), root)

    def period(self) -> int:
        """gcd of cycle lengths through a reference symbol, via BFS level differences."""
        level = self._levels()
        d = 0
        for a, b in self.graph.subgraph(self.essential).edges():
            d = gcd(d, abs(level[a] + 1 - level[b]))
            if d == 1:
                break
        return d

    def cyclic_classes(self) -> PeriodicDecomposition:
        level = self._levels()
        p = self.period()
        buckets: List[Set[int]] = [set() for _ in range(p)]
        for symbol, depth in level.items():
            buckets[depth % p].add(int(symbol))
        return PeriodicDecomposition(tuple(frozenset(b) for b in buckets))

    def class_power_primitive(self, decomposition: PeriodicDecomposition) -> bool:
        """True iff A^p restricted to every cyclic class is primitive."""
        p = decomposition.period
        power = np.linalg.matrix_power(self.matrix, p) > 0
        for members in decomposition.classes:
            idx = sorted(members)
            block = power[np.ix_(idx, idx)].astype(np.int64)
            if _boolean_power_positive(block, wielandt_bound(len(idx))) is None:
                return False
        return True

    def specification_constant(self, eps: Fraction) -> int:
        index = self.primitivity_index()
        if index is None:
            raise CapabilityError("specification needs a mixing (primitive) transition system")
        return m_epsilon(self.metric, Fraction(eps)) + index

    def describe(self) -> Dict[str, object]:
        return {"kind": self.kind, "n": self.n, "matrix": self.matrix.tolist()}


class SoficModel(ShiftModel):
    """Label sequences of paths in a labeled multigraph."""

    kind = "sofic"

    def __init__(self, edges: Sequence[Tuple[object, object, int]], n: Optional[int] = None):
        graph = nx.MultiDiGraph()
        for tail, head, label in edges:
            graph.add_edge(tail, head, label=int(label))
        if graph.number_of_edges() == 0:
            raise DomainError("sofic presentation needs at least one edge")
        labels = {label for _, _, label in graph.edges(data="label")}
        self.alphabet = Alphabet(n if n is not None else max(labels) + 1)
        self.alphabet.check(sorted(labels))
        _make_essential(graph)
        if graph.number_of_nodes() == 0:
            raise DomainError("sofic presentation admits no bi-infinite path")
        self.graph = graph
        self.vertices = sorted(graph.nodes, key=repr)

    def _follow(self, states: Set[object], word: Sequence[int]) -> Set[object]:
        for a in word:
            states = {
                head
                for tail in states
                for _, head, label in self.graph.out_edges(tail, data="label")
                if label == a
            }
            if not states:
                break
        return states

    def _readable_from(self, word: Sequence[int]) -> Set[object]:
        """Vertices from which a path labeled `word` starts."""
        if not word:
            return set(self.graph.nodes)
        return {q for q in self.graph.nodes if self._follow({q}, word)}

    def admissible(self, word: Sequence[int]) -> bool:
        return bool(self._follow(set(self.graph.nodes), word)) or not word

    def cyclic_admissible(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        return bool(word) and any(q in self._follow({q}, word) for q in self.graph.nodes)

    def bridge(self, u: Sequence[int], v: Sequence[int], gap: int) -> Optional[Word]:
        if gap < 0:
            raise DomainError("gap must be nonnegative")
        u, v = tuple(u), tuple(v)
        if not self.admissible(u) or not self.admissible(v):
            raise DomainError("bridge endpoints must be admissible")
        ends = self._follow(set(self.graph.nodes), u)
        layers = [self._readable_from(v)]
        for _ in range(gap):
            layers.append({tail for tail, head in self.graph.edges() if head in layers[-1]})
        current = ends & layers[gap]
        if not current:
            return None
        out: List[int] = []
        for j in range(1, gap + 1):
            nxt_layer = layers[gap - j]
            moves: Dict[int, Set[object]] = {}
            for tail in current:
                for _, head, label in self.graph.out_edges(tail, data="label"):
                    if head in nxt_layer:
                        moves.setdefault(label, set()).add(head)
            label = min(moves)
            out.append(label)
            current = moves[label]
        return tuple(out)

    @cached_property
    def _vertex_matrix(self) -> np.ndarray:
        index = {q: i for i, q in enumerate(self.vertices)}
        m = np.zeros((len(index), len(index)), dtype=np.int64)
        for tail, head in self.graph.edges():
            m[index[tail], index[head]] = 1
        return m

    def primitivity_index(self, cap: Optional[int] = None) -> Optional[int]:
        k = len(self.vertices)
        return _boolean_power_positive(self._vertex_matrix, cap or wielandt_bound(k))

    def is_mixing(self) -> bool:
        return self.primitivity_index() is not None

    def specification_constant(self, eps: Fraction) -> int:
        index = self.primitivity_index()
        if index is None:
            raise CapabilityError("specification needs a primitive sofic presentation")
        return m_epsilon(self.metric, Fraction(eps)) + index

    def describe(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "n": self.n,
            "vertices": len(self.vertices),
            "edges": self.graph.number_of_edges(),
        }


def _make_essential(graph: nx.MultiDiGraph) -> None:
    """Remove vertices that lie on no bi-infinite path."""
    while True:
        stranded = [q for q in graph if graph.out_degree(q) == 0 or graph.in_degree(q) == 0]
        if not stranded:
            return
        graph.remove_nodes_from(stranded)


def enumerate_cycles(ts: TransitionSystem, max_length: int) -> Iterator[Tuple[int, ...]]:
    """Simple cycles of the transition graph up to `max_length` symbols."""
    for cycle in nx.simple_cycles(ts.graph.subgraph(ts.essential)):
        if len(cycle) <= max_length:
            yield tuple(cycle)
