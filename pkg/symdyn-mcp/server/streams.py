"""Block-structured streams and exact word counting over long prefixes.

A BlockStream is a sorted list of pieces; piece ``(start, word, phase)`` repeats
``word`` cyclically from index ``start`` (reading ``word[phase]`` there) until the
next piece begins. Constructed scrambled-family members are block streams whose
scheduled times reach hundreds of decimal digits, so nothing here walks a prefix
symbol by symbol.
"""

import threading
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from mcp.server.fastmcp.utilities.logging import get_logger

from errors import DomainError, InvariantError
from symbolic import Side, SymbolStream, Word

logger = get_logger(__name__)


@dataclass(frozen=True)
class Piece:
    start: int
    word: Word
    phase: int = 0

    def __post_init__(self) -> None:
        if not self.word:
            raise DomainError("a piece needs a nonempty word")

    @property
    def period(self) -> int:
        return len(self.word)

    def phase_at(self, i: int) -> int:
        return (i - self.start + self.phase) % len(self.word)

    def symbol(self, i: int) -> int:
        return self.word[self.phase_at(i)]

    def moved(self, start: int) -> "Piece":
        """Same symbols, described from a later start index."""
        return Piece(start, self.word, self.phase_at(start))


# (lo, hi, piece): the piece governs indices lo..hi inclusive
Segment = Tuple[int, int, Piece]

Extender = Callable[["PieceStore", int], None]


class PieceStore:
    """Shared, append-only piece list; shifted views of one stream share a store."""

    def __init__(
        self,
        pieces: Sequence[Piece],
        known_end: int,
        extender: Optional[Extender] = None,
    ):
        if not pieces:
            raise DomainError("a block stream needs at least one piece")
        self.pieces: List[Piece] = []
        self.starts: List[int] = []
        for piece in pieces:
            self.append(piece)
        self.known_end = known_end
        self.extender = extender
        self.max_index = 0
        self._lock = threading.RLock()

    def append(self, piece: Piece) -> None:
        if self.pieces:
            last = self.pieces[-1]
            if piece.start <= last.start:
                raise InvariantError("pieces must be appended in increasing order")
            if last.word == piece.word and last.phase_at(piece.start) == piece.phase:
                return
        self.pieces.append(piece)
        self.starts.append(piece.start)

    def ensure(self, i: int) -> None:
        """Make the pieces authoritative through index i."""
        if i > self.max_index:
            self.max_index = i
        if self.extender is None or i <= self.known_end:
            return
        with self._lock:
            while i > self.known_end:
                before = self.known_end
                self.extender(self, i)
                if self.known_end <= before:
                    raise InvariantError("stream extender made no progress")

    def locate(self, i: int) -> Piece:
        idx = bisect_right(self.starts, i) - 1
        return self.pieces[max(idx, 0)]


class BlockStream(SymbolStream):
    """Piecewise periodic stream; realize(i) reads the store at i + offset."""

    def __init__(
        self,
        pieces: Sequence[Piece],
        alphabet_size: int,
        side: Side = Side.ONE,
        known_end: Optional[int] = None,
        extender: Optional[Extender] = None,
    ):
        self.alphabet_size = alphabet_size
        self.side = side
        if known_end is None:
            last = pieces[-1]
            known_end = last.start + len(last.word) - 1
        self.store = PieceStore(pieces, known_end, extender)
        self.offset = 0

    @classmethod
    def _view(cls, store: PieceStore, alphabet_size: int, side: Side, offset: int):
        view = cls.__new__(cls)
        view.store = store
        view.alphabet_size = alphabet_size
        view.side = side
        view.offset = offset
        return view

    @classmethod
    def periodic(
        cls, word: Sequence[int], alphabet_size: int, side: Side = Side.ONE, phase: int = 0
    ) -> "BlockStream":
        """The periodic point word^infinity, reading word[phase] at index 1 (index 0 two-sided)."""
        start = 1 if side is Side.ONE else 0
        return cls([Piece(start, tuple(word), phase % len(word))], alphabet_size, side)

    def realize(self, i: int) -> int:
        self.check_index(i)
        j = i + self.offset
        self.store.ensure(j)
        if self.side is Side.ONE and j < self.store.starts[0]:
            raise DomainError(f"index {i} precedes the first piece of the stream")
        return self.store.locate(j).symbol(j)

    @property
    def realized_depth(self) -> int:
        return max(self.store.known_end, self.store.max_index) - self.offset

    @property
    def known_end(self) -> int:
        """Last index (in this view) fixed by explicit pieces."""
        return self.store.known_end - self.offset

    @property
    def piece_count(self) -> int:
        return len(self.store.pieces)

    def shifted(self, k: int) -> "BlockStream":
        return BlockStream._view(self.store, self.alphabet_size, self.side, self.offset + k)

    def segments(self, lo: int, hi: int) -> List[Segment]:
        """Pieces clipped to [lo, hi], expressed in this view's indices."""
        if hi < lo:
            return []
        store = self.store
        store.ensure(hi + self.offset)
        a, b = lo + self.offset, hi + self.offset
        idx = max(bisect_right(store.starts, a) - 1, 0)
        out: List[Segment] = []
        cursor = a
        while cursor <= b:
            piece = store.pieces[idx]
            nxt = store.starts[idx + 1] if idx + 1 < len(store.starts) else None
            end = b if nxt is None else min(b, nxt - 1)
            if end >= cursor:
                local = piece.moved(cursor)
                out.append(
                    (cursor - self.offset, end - self.offset, Piece(cursor - self.offset, local.word, local.phase))
                )
                cursor = end + 1
            idx += 1
            if nxt is None:
                break
        return out

    def window(self, lo: int, hi: int) -> Word:
        """Symbols at indices lo..hi-1."""
        if hi <= lo:
            return ()
        if self.side is Side.ONE and lo < 1:
            raise DomainError("one-sided streams are indexed from 1")
        out: List[int] = []
        for seg_lo, seg_hi, piece in self.segments(lo, hi - 1):
            p = len(piece.word)
            reps = (seg_hi - seg_lo + 1 + piece.phase) // p + 1
            tiled = piece.word * reps
            out.extend(tiled[piece.phase : piece.phase + seg_hi - seg_lo + 1])
        return tuple(out)

    def pieces_in(self, lo: int, hi: int) -> List[Piece]:
        return [piece for _, _, piece in self.segments(lo, hi)]


class BlockStreamBuilder:
    """Appends words, periodic runs and copies of other streams from index `start`."""

    def __init__(self, alphabet_size: int, side: Side = Side.ONE, start: int = 1):
        self.alphabet_size = alphabet_size
        self.side = side
        self.cursor = start
        self.pieces: List[Piece] = []

    def _push(self, piece: Piece) -> None:
        if self.pieces:
            last = self.pieces[-1]
            if last.word == piece.word and last.phase_at(piece.start) == piece.phase:
                return
        self.pieces.append(piece)

    def append_word(self, word: Sequence[int]) -> "BlockStreamBuilder":
        if word:
            self._push(Piece(self.cursor, tuple(word), 0))
            self.cursor += len(word)
        return self

    def append_periodic(
        self, word: Sequence[int], length: int, phase: int = 0
    ) -> "BlockStreamBuilder":
        if length > 0:
            self._push(Piece(self.cursor, tuple(word), phase % len(word)))
            self.cursor += length
        return self

    def append_copy(
        self, source: BlockStream, lo: int, length: int
    ) -> "BlockStreamBuilder":
        """Copy source[lo .. lo+length-1] to the cursor."""
        if length <= 0:
            return self
        shift = self.cursor - lo
        for seg_lo, _, piece in source.segments(lo, lo + length - 1):
            self._push(Piece(seg_lo + shift, piece.word, piece.phase))
        self.cursor += length
        return self

    def build(self, extender: Optional[Extender] = None) -> BlockStream:
        """Freeze the pieces; the last piece repeats forever unless `extender` grows the stream."""
        if not self.pieces:
            raise DomainError("nothing appended to the stream")
        return BlockStream(
            self.pieces,
            self.alphabet_size,
            self.side,
            known_end=self.cursor - 1,
            extender=extender,
        )


def copy_extender(source: BlockStream, source_from: int, target_from: int) -> Extender:
    """Extender continuing a stream as source[source_from ...] placed at target_from."""

    def extend(store: PieceStore, need: int) -> None:
        lo = store.known_end + 1
        hi = max(need, lo + max(lo - target_from, 1024))
        shift = target_from - source_from
        for seg_lo, _, piece in source.segments(lo - shift, hi - shift):
            store.append(Piece(seg_lo + shift, piece.word, piece.phase))
        store.known_end = hi

    return extend


@lru_cache(maxsize=4096)
def cyclic_windows(word: Word, length: int) -> Tuple[Word, ...]:
    """The window of `length` read from each phase of the cyclic word."""
    p = len(word)
    tiled = word * (length // p + 2)
    return tuple(tiled[r : r + length] for r in range(p))


def _residue_counts(first_phase: int, count: int, period: int) -> List[int]:
    q, rem = divmod(count, period)
    counts = [q] * period
    for j in range(rem):
        counts[(first_phase + j) % period] += 1
    return counts


def count_windows(
    stream: SymbolStream, length: int, lo: int, hi: int
) -> Counter:
    """
    Count the words x[c .. c+length-1] over all starts c in [lo, hi].

    Args:
        stream: Stream to scan (block streams are counted piece by piece)
        length: Window length
        lo: First start index
        hi: Last start index

    Returns:
        Counter mapping each window word to its number of starts
    """
    counts: Counter = Counter()
    if hi < lo or length < 1:
        return counts
    if not isinstance(stream, BlockStream):
        data = stream.window(lo, hi + length)
        for c in range(hi - lo + 1):
            counts[data[c : c + length]] += 1
        return counts

    for seg_lo, seg_hi, piece in stream.segments(lo, hi + length - 1):
        p = len(piece.word)
        inside_hi = min(seg_hi - length + 1, hi)
        if inside_hi >= seg_lo:
            total = inside_hi - seg_lo + 1
            windows = cyclic_windows(piece.word, length)
            for residue, k in enumerate(_residue_counts(piece.phase, total, p)):
                if k:
                    counts[windows[residue]] += k
            straddle_lo = inside_hi + 1
        else:
            straddle_lo = seg_lo
        straddle_hi = min(seg_hi, hi)
        if straddle_hi >= straddle_lo:
            data = stream.window(straddle_lo, straddle_hi + length)
            for c in range(straddle_hi - straddle_lo + 1):
                counts[data[c : c + length]] += 1
    return counts


def count_window_series(
    stream: SymbolStream, length: int, checkpoints: Iterable[int], start: int = 1
) -> Dict[int, Counter]:
    """Cumulative window counts over starts [start, n] for each checkpoint n, in one pass."""
    series: Dict[int, Counter] = {}
    running: Counter = Counter()
    done = start - 1
    for n in sorted(set(checkpoints)):
        if n > done:
            running.update(count_windows(stream, length, done + 1, n))
            done = n
        series[n] = Counter(running)
    return series
