"""Beta-shifts: greedy expansions, the Parry criterion and nested families.

Remainders f_beta^n(x) are kept exactly as vectors over the basis
1, beta, ..., beta^(deg-1) of the number field of beta, reduced by its minimal
polynomial. Digits come from error-bounded evaluation of those vectors; a remainder
whose vector is rational is floored exactly, so boundary hits are never guessed.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from math import floor, gcd
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import sympy as sp
from mcp.server.fastmcp.utilities.logging import get_logger

from errors import BudgetError, CapabilityError, DomainError, InvariantError, PrecisionError
from settings import get_settings
from subshifts import ShiftModel
from symbolic import Alphabet, Word, m_epsilon

logger = get_logger(__name__)

_X = sp.Symbol("x")
_BETA = sp.Symbol("beta")
ONE_EXPANSION_DEPTH = 512


def parse_beta(text: str) -> sp.Expr:
    """Decimal strings become exact rationals; anything else is parsed by sympy."""
    text = str(text).strip()
    try:
        value = sp.Rational(text)
    except (TypeError, ValueError):
        value = sp.sympify(text)
    if not value.is_real or not bool(value > 1):
        raise DomainError(f"beta must be a real number greater than 1, got {text}")
    return value


@dataclass(frozen=True)
class DigitSequence:
    """prefix followed by period repeated forever; an empty period means only the prefix is known."""

    prefix: Word
    period: Word = ()

    def digit(self, k: int) -> int:
        """1-based digit."""
        if k <= len(self.prefix):
            return self.prefix[k - 1]
        if not self.period:
            raise PrecisionError(f"digit {k} of the expansion of 1 is beyond the computed depth")
        return self.period[(k - len(self.prefix) - 1) % len(self.period)]

    def head(self, length: int) -> Word:
        return tuple(self.digit(k) for k in range(1, length + 1))

    @property
    def exact(self) -> bool:
        return bool(self.period)

    def max_zero_run(self) -> int:
        if not self.exact:
            raise CapabilityError("zero runs of the expansion of 1 cannot be certified")
        if all(d == 0 for d in self.period):
            raise CapabilityError("the expansion of 1 ends in zeros")
        digits = self.prefix + self.period * 3
        best = run = 0
        for d in digits:
            run = run + 1 if d == 0 else 0
            best = max(best, run)
        return best


class BetaModel(ShiftModel):
    """The beta-shift: closure of greedy beta-expansions."""

    kind = "beta"

    def __init__(
        self,
        beta,
        precision_bits: Optional[int] = None,
        quasi_greedy_period: Optional[Sequence[int]] = None,
    ):
        self.beta = parse_beta(beta) if isinstance(beta, str) else sp.sympify(beta)
        if not bool(self.beta > 1):
            raise DomainError("beta must exceed 1")
        self.precision_bits = precision_bits or get_settings().beta_precision_bits
        self._known_period = tuple(quasi_greedy_period) if quasi_greedy_period else None
        self.min_poly, self.degree = self._minimal_polynomial()
        self._beta_cache: Dict[int, mpmath.mpf] = {}
        self.alphabet = Alphabet(self.quasi_greedy.digit(1) + 1)

    def _minimal_polynomial(self) -> Tuple[Optional[List[Fraction]], int]:
        """Monic minimal polynomial coefficients (low to high, leading 1 dropped)."""
        try:
            poly = sp.Poly(sp.minimal_polynomial(self.beta, _X), _X)
        except Exception:
            logger.warning("beta=%s is not algebraic; remainders grow with depth", self.beta)
            return None, 0
        coeffs = [Fraction(int(c.p), int(c.q)) for c in poly.all_coeffs()]
        lead = coeffs[0]
        monic = [c / lead for c in reversed(coeffs)]
        return monic[:-1], len(monic) - 1

    @cached_property
    def b(self) -> int:
        """Largest digit: floor(beta), or beta - 1 for integer beta."""
        return self.alphabet.size - 1

    # exact remainder arithmetic ----------------------------------------

    def _normalize(self, vec: List[Fraction]) -> List[Fraction]:
        if self.min_poly is None:
            return vec
        return vec + [Fraction(0)] * (self.degree - len(vec))

    def _times_beta(self, vec: List[Fraction]) -> List[Fraction]:
        shifted = [Fraction(0)] + self._normalize(vec)
        if self.min_poly is None:
            return shifted
        top = shifted.pop()
        return [c - top * m for c, m in zip(shifted, self.min_poly)]

    def _beta_mpf(self, bits: int) -> mpmath.mpf:
        cached = self._beta_cache.get(bits)
        if cached is None:
            digits = int(bits * 0.30103) + 20
            with mpmath.workprec(bits + 64):
                cached = mpmath.mpf(str(sp.N(self.beta, digits)))
            self._beta_cache[bits] = cached
        return cached

    def _floor(self, vec: List[Fraction]) -> int:
        """floor of sum vec[k] beta^k, exact."""
        if all(c == 0 for c in vec[1:]):
            return floor(vec[0]) if vec else 0
        bits = self.precision_bits
        for _ in range(5):
            with mpmath.workprec(bits + 32):
                beta = self._beta_mpf(bits)
                value = mpmath.mpf(0)
                size = mpmath.mpf(0)
                for c in reversed(vec):
                    term = mpmath.mpf(c.numerator) / c.denominator
                    value = value * beta + term
                    size = size * beta + abs(term)
                err = size * (len(vec) + 2) * mpmath.mpf(2) ** (-bits)
                lo = int(mpmath.floor(value - err))
                hi = int(mpmath.floor(value + err))
            if lo == hi:
                return lo
            bits *= 2
        raise PrecisionError(f"cannot place a beta-orbit point at {self.precision_bits} bits")

    def _step(self, vec: List[Fraction]) -> Tuple[int, List[Fraction]]:
        scaled = self._times_beta(vec)
        digit = self._floor(scaled)
        scaled = list(scaled)
        scaled[0] -= digit
        return digit, scaled

    @cached_property
    def greedy_one(self) -> Tuple[Word, Optional[int], bool]:
        """Greedy expansion of 1: (digits, index where the period starts, finite flag)."""
        vec = self._normalize([Fraction(1)])
        seen: Dict[Tuple[Fraction, ...], int] = {}
        digits: List[int] = []
        for k in range(ONE_EXPANSION_DEPTH):
            key = tuple(vec)
            if self.min_poly is not None and key in seen:
                return tuple(digits), seen[key], False
            seen[key] = k
            digit, vec = self._step(vec)
            digits.append(digit)
            if all(c == 0 for c in vec):
                return tuple(digits), None, True
        return tuple(digits), None, False

    @cached_property
    def quasi_greedy(self) -> DigitSequence:
        """i*(1, beta): the greedy expansion of 1 with a finite tail made periodic."""
        if self._known_period is not None:
            return DigitSequence((), self._known_period)
        digits, loop, finite = self.greedy_one
        if finite:
            last = len(digits)
            return DigitSequence((), digits[: last - 1] + (digits[last - 1] - 1,))
        if loop is not None:
            return DigitSequence(digits[:loop], digits[loop:])
        return DigitSequence(digits)

    def element(self, x) -> List[Fraction]:
        """Coordinates of x, a rational or a polynomial in `beta`, over the field basis."""
        if isinstance(x, (int, Fraction)):
            return self._normalize([Fraction(x)])
        expr = sp.sympify(x, locals={"beta": _BETA}, rational=True) if isinstance(x, str) else sp.sympify(x)
        try:
            poly = sp.Poly(sp.expand(expr), _BETA)
        except sp.PolynomialError as exc:
            raise DomainError(f"{x} is not a polynomial in beta") from exc
        vec: List[Fraction] = [Fraction(0)]
        for coeff in poly.all_coeffs():
            if not coeff.is_Rational:
                raise DomainError(f"{x} has a non-rational coefficient {coeff}")
            vec = self._times_beta(vec)
            vec[0] += Fraction(int(coeff.p), int(coeff.q))
        return self._normalize(vec)

    def expand(self, x, depth: int) -> Word:
        """Greedy digits of x in [0, 1): digit j when f^(n-1)(x) lies in [j/beta, (j+1)/beta)."""
        if depth < 0:
            raise DomainError("depth must be nonnegative")
        vec = self.element(x)
        if self._floor(vec) != 0:
            raise DomainError("x must lie in [0, 1)")
        out: List[int] = []
        for _ in range(depth):
            digit, vec = self._step(vec)
            out.append(digit)
        return tuple(out)

    def approximate(self, digits: Sequence[int], dps: int = 50) -> mpmath.mpf:
        """sum_n digits_n beta^-n."""
        with mpmath.workdps(dps):
            beta = mpmath.mpf(str(sp.N(self.beta, dps + 10)))
            return mpmath.fsum(d * beta ** (-(k + 1)) for k, d in enumerate(digits))

    # Parry criterion ----------------------------------------------------

    def _suffix_ok(self, word: Word, start: int) -> bool:
        """word[start:] <= the same-length head of i*."""
        qg = self.quasi_greedy
        for k, d in enumerate(word[start:], start=1):
            ref = qg.digit(k)
            if d < ref:
                return True
            if d > ref:
                return False
        return True

    def admissible(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        if any(not 0 <= d <= self.b for d in word):
            return False
        return all(self._suffix_ok(word, s) for s in range(len(word)))

    def extensions(self, word: Word) -> List[int]:
        out = []
        for a in range(self.b + 1):
            extended = word + (a,)
            if all(self._suffix_ok(extended, s) for s in range(len(extended))):
                out.append(a)
        return out

    def cyclic_admissible(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        if not word or any(not 0 <= d <= self.b for d in word):
            return False
        qg = self.quasi_greedy
        if qg.exact:
            span = len(qg.prefix) + len(word) * len(qg.period) // gcd(len(word), len(qg.period))
            depth = span + len(word)
        else:
            depth = len(qg.prefix)
        for r in range(len(word)):
            rotation = word[r:] + word[:r]
            verdict = None
            for k in range(1, depth + 1):
                d, ref = rotation[(k - 1) % len(word)], qg.digit(k)
                if d != ref:
                    verdict = d < ref
                    break
            if verdict is False:
                return False
            if verdict is None and not qg.exact:
                raise PrecisionError("periodic point ties the computed expansion of 1")
        return True

    def bridge(self, u: Sequence[int], v: Sequence[int], gap: int) -> Optional[Word]:
        """Zero fill first, then an exhaustive lexicographic repair."""
        if gap < 0:
            raise DomainError("gap must be nonnegative")
        u, v = tuple(u), tuple(v)
        if not self.admissible(u) or not self.admissible(v):
            raise DomainError("bridge endpoints must be admissible")
        zeros = (0,) * gap
        if self.admissible(u + zeros + v):
            return zeros
        budget = get_settings().search_budget
        visited = 0
        stack: List[Word] = [()]
        while stack:
            partial = stack.pop()
            visited += 1
            if visited > budget:
                raise BudgetError("beta-shift bridge search exhausted its budget")
            if len(partial) == gap:
                if self.admissible(u + partial + v):
                    return partial
                continue
            for a in reversed(self.extensions(u + partial)):
                stack.append(partial + (a,))
        return None

    def is_mixing(self) -> bool:
        return True

    def specification_constant(self, eps: Fraction) -> int:
        """mEpsilon plus the longest zero run of i*, plus one."""
        return m_epsilon(self.metric, Fraction(eps)) + self.quasi_greedy.max_zero_run() + 1

    def numeric(self, dps: int = 30) -> str:
        return str(sp.N(self.beta, dps))

    def describe(self) -> Dict[str, object]:
        qg = self.quasi_greedy
        return {
            "kind": self.kind,
            "n": self.n,
            "beta": str(self.beta),
            "beta_numeric": self.numeric(),
            "quasi_greedy_prefix": list(qg.prefix),
            "quasi_greedy_period": list(qg.period),
        }


def expansion_residual(model: BetaModel, x, digits: Sequence[int], dps: int = 60) -> mpmath.mpf:
    """x - sum_n digits_n beta^-n; greedy digits of depth D leave a residual in [0, beta^-D)."""
    if isinstance(x, (int, Fraction)):
        expr = sp.Rational(Fraction(x).numerator, Fraction(x).denominator)
    else:
        expr = sp.sympify(str(x), locals={"beta": _BETA}, rational=True)
    value = sp.N(expr.subs(_BETA, model.beta), dps + 10)
    with mpmath.workdps(dps):
        return mpmath.mpf(str(value)) - model.approximate(digits, dps)


def _lex_less_periodic(a: Word, b: DigitSequence, depth: int) -> Optional[bool]:
    for k in range(1, depth + 1):
        x, y = a[(k - 1) % len(a)], b.digit(k)
        if x != y:
            return x < y
    return None


def _is_primitive(word: Word) -> bool:
    p = len(word)
    return all(word != word[r:] + word[:r] for r in range(1, p) if p % r == 0)


def _is_max_rotation(word: Word) -> bool:
    return all(word >= word[r:] + word[:r] for r in range(1, len(word)))


def _parry_beta(period: Word) -> sp.Expr:
    """The beta whose quasi-greedy expansion of 1 is period^infinity."""
    p = len(period)
    # 1 = sum_{j<p} d_j beta^-j + (d_p + 1) beta^-p
    poly = _X**p - sum(d * _X ** (p - j - 1) for j, d in enumerate(period[:-1]))
    poly -= period[-1] + 1
    roots = sp.Poly(poly, _X).real_roots()
    return roots[-1]


def nested_beta_family(
    model: BetaModel, count: int, max_period: int = 12, check_depth: int = 12
) -> List[BetaModel]:
    """
    Increasing parameters beta_1 < ... < beta_count < beta with specification.

    Candidates are purely periodic quasi-greedy expansions d^infinity with d primitive,
    maximal among its rotations, |d| <= max_period, and d^infinity below i*(beta); the
    `count` largest are taken.

    Args:
        model: The ambient beta-shift
        count: Number of parameters
        max_period: Longest candidate period
        check_depth: Word length for the inclusion check

    Returns:
        BetaModels ordered by increasing beta

    Raises:
        BudgetError: when too few candidates exist within the search budget
        InvariantError: when an inclusion check fails
    """
    if count < 0:
        raise DomainError("count must be nonnegative")
    if count == 0:
        return []
    budget = get_settings().search_budget
    qg = model.quasi_greedy
    candidates: List[Word] = []
    examined = 0
    for p in range(1, max_period + 1):
        for word in product(range(model.b + 1), repeat=p):
            examined += 1
            if examined > budget:
                raise BudgetError("nested beta family search exhausted its budget")
            if word[0] == 0 or not _is_primitive(word) or not _is_max_rotation(word):
                continue
            depth = len(qg.prefix) + 2 * (p + max(len(qg.period), 1)) + p
            if _lex_less_periodic(word, qg, depth):
                candidates.append(word)
    if len(candidates) < count:
        raise BudgetError(f"only {len(candidates)} specification parameters found below beta")

    def key(word: Word) -> Tuple[int, ...]:
        return tuple(word[k % len(word)] for k in range(2 * max_period))

    chosen = sorted(sorted(candidates, key=key)[-count:], key=key)
    family = [
        BetaModel(_parry_beta(word), model.precision_bits, quasi_greedy_period=word)
        for word in chosen
    ]
    chain = family + [model]
    for smaller, larger in zip(chain, chain[1:]):
        for word in smaller.words(check_depth):
            if not larger.admissible(word):
                raise InvariantError(
                    f"word {word} of beta={smaller.numeric(12)} missing from beta={larger.numeric(12)}"
                )
    logger.info("nested beta family: %s", [m.numeric(12) for m in family])
    return family
