"""Weight functions alpha for the alpha-weighted closeness statistic.

A usable alpha is nondecreasing, unbounded and o(n). Only finite evidence of the
last two is available, so each function carries flags computed on a test grid.
"""

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath

from errors import ConfigError, DomainError
from settings import get_settings

DEFAULT_GRID: Tuple[int, ...] = tuple(10**k for k in range(1, 13))


def _ceil_sqrt(n: int) -> int:
    root = math.isqrt(n)
    return root if root * root == n else root + 1


def _ceil_cbrt(n: int) -> int:
    root = int(round(n ** (1 / 3))) if n < 1 << 52 else 1 << ((n.bit_length() + 2) // 3)
    # integer Newton step down to the floor cube root
    while root**3 > n:
        root = (2 * root + n // (root * root)) // 3
    while (root + 1) ** 3 <= n:
        root += 1
    return root if root**3 == n else root + 1


def _ceil_log(n: int) -> int:
    with mpmath.workdps(get_settings().mp_dps):
        return int(mpmath.ceil(mpmath.log(n + 1)))


@dataclass(frozen=True)
class AlphaFunction:
    """Named nondecreasing map n -> alpha(n) >= 0."""

    name: str
    rule: Callable[[int], int] = field(repr=False, compare=False)

    def __call__(self, n: int) -> Fraction:
        if n < 0:
            raise DomainError("alpha is defined on nonnegative integers")
        return Fraction(self.rule(n))

    def certify(
        self, grid: Sequence[int] = DEFAULT_GRID, envelope: Fraction = Fraction(1)
    ) -> Dict[str, bool]:
        """
        Finite evidence for membership in the family of admissible weights.

        Args:
            grid: Increasing sample points
            envelope: Declared bound on alpha(N)/N

        Returns:
            {"nondecreasing", "unbounded", "sublinear"} flags on the grid
        """
        values = [self(n) for n in grid]
        ratios = [v / n for v, n in zip(values, grid)]
        return {
            "nondecreasing": all(a <= b for a, b in zip(values, values[1:])),
            "unbounded": values[-1] > values[0],
            "sublinear": all(r <= envelope for r in ratios) and ratios[-1] < ratios[0],
        }

    def log_ratio(self, n: int) -> float:
        """alpha(n) / ln n, the finite proxy for the liminf hypothesis of the polynomial metric."""
        if n < 2:
            raise DomainError("log ratio needs n >= 2")
        with mpmath.workdps(30):
            value = self(n)
            return float(mpmath.mpf(value.numerator) / value.denominator / mpmath.log(n))


def table_alpha(points: Sequence[Tuple[int, Union[int, str]]], name: str = "table") -> AlphaFunction:
    """Step function: alpha(n) is the value at the last breakpoint <= n (0 before the first)."""
    pairs = sorted((int(n), Fraction(str(v))) for n, v in points)
    if not pairs:
        raise ConfigError("alpha table is empty")
    values = [v for _, v in pairs]
    if any(a > b for a, b in zip(values, values[1:])):
        raise ConfigError("alpha table values must be nondecreasing")
    starts = [n for n, _ in pairs]

    def rule(n: int) -> Fraction:
        idx = bisect_right(starts, n) - 1
        return values[idx] if idx >= 0 else Fraction(0)

    return AlphaFunction(name, rule)


ALPHAS: Dict[str, AlphaFunction] = {
    "sqrt": AlphaFunction("sqrt", _ceil_sqrt),
    "cbrt": AlphaFunction("cbrt", _ceil_cbrt),
    "log": AlphaFunction("log", _ceil_log),
    "log2": AlphaFunction("log2", lambda n: _ceil_log(n) ** 2),
}


def get_alpha(spec: Union[None, str, dict, AlphaFunction]) -> Optional[AlphaFunction]:
    """
    Resolve an alpha reference.

    Args:
        spec: None, a registry name, a path to a JSON table, {"table": [[n, value], ...]},
            or an AlphaFunction

    Returns:
        The AlphaFunction, or None when spec is None
    """
    if spec is None or isinstance(spec, AlphaFunction):
        return spec
    if isinstance(spec, dict):
        if "table" not in spec:
            raise ConfigError("alpha object needs a 'table' entry")
        return table_alpha(spec["table"], spec.get("name", "table"))
    if spec in ALPHAS:
        return ALPHAS[spec]
    path = Path(spec)
    if path.suffix == ".json" and path.exists():
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"alpha table {path} is not valid JSON: {exc}") from exc
        points = data["table"] if isinstance(data, dict) else data
        return table_alpha(points, path.stem)
    raise ConfigError(f"unknown alpha '{spec}' (known: {', '.join(list_alphas())})")


def list_alphas() -> List[str]:
    return sorted(ALPHAS)
