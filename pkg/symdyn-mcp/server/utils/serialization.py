"""Run-length stream encoding and deterministic JSON/CSV writers for run artifacts."""

import csv
import hashlib
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from errors import ConfigError
from streams import BlockStream, Piece
from symbolic import Side, format_word, parse_word


def stream_to_rle(stream: BlockStream, lo: int, hi: int) -> Dict[str, Any]:
    """
    Encode stream[lo .. hi] as its pieces.

    Each run is {"start", "length", "word", "phase"}: the word repeated cyclically from
    `phase` for `length` symbols. Indices and lengths are strings because scheduled
    times outgrow every fixed-width integer.

    Args:
        stream: Block stream to encode
        lo: First index written
        hi: Last index written

    Returns:
        JSON-ready dictionary
    """
    n = stream.alphabet_size
    runs = [
        {
            "start": str(seg_lo),
            "length": str(seg_hi - seg_lo + 1),
            "word": format_word(piece.word, n),
            "phase": piece.phase,
        }
        for seg_lo, seg_hi, piece in stream.segments(lo, hi)
    ]
    return {
        "alphabet": n,
        "side": stream.side.value,
        "first": str(lo),
        "last": str(hi),
        "runs": runs,
    }


def rle_to_stream(data: Dict[str, Any]) -> BlockStream:
    """
    Decode a stream written by stream_to_rle.

    The last run keeps repeating past `last`.

    Raises:
        ConfigError: malformed runs
    """
    try:
        n = int(data["alphabet"])
        side = Side(data.get("side", Side.ONE.value))
        pieces: List[Piece] = []
        expected = None
        for run in data["runs"]:
            start = int(run["start"])
            if expected is not None and start != expected:
                raise ConfigError(f"run at {start} does not continue the run ending at {expected - 1}")
            word = parse_word(str(run["word"]), n)
            pieces.append(Piece(start, word, int(run.get("phase", 0)) % len(word)))
            expected = start + int(run["length"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed run-length stream: {exc}") from exc
    if not pieces:
        raise ConfigError("a run-length stream needs at least one run")
    return BlockStream(pieces, n, side, known_end=expected - 1)


def _default(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(data: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, default=_default) + "\n"


def csv_text(rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow([str(cell) for cell in row])
    return buffer.getvalue()


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()
