"""Level-set and recurrence-class targeting on top of the scramble constructor.

A level-set family picks two periodic measures whose phi-averages bracket the
levels a <= b, places nu1 and nu2 on the segment between them at exactly those
levels, and traces K = conv{nu1, nu2}. The recurrence designs reuse the same
machinery with K chosen so that visits to the initial cylinder are either
confined to short dense-slot runs or carried by a measure of large mass.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from mcp.server.fastmcp.utilities.logging import get_logger

from alphas import AlphaFunction
from distal import DistalMode, DistalSeed, make_seed
from errors import DomainError
from measures import FiniteMeasure, PeriodicMeasure, Segment, convex, periodic
from scramble import ScrambleFamily, build_schedule, construct_family, saturation_target
from subshifts import ShiftModel, TransitionSystem
from symbolic import CylinderObservable, Observable, Word, format_word, length_lex_words, m_epsilon

logger = get_logger(__name__)

Phi = Union[Observable, CylinderObservable]

# longest cycle word searched for a bracketing periodic measure
POOL_LENGTH = 12


def periodic_pool(model: ShiftModel, max_length: int = POOL_LENGTH) -> List[PeriodicMeasure]:
    """Non-fixed periodic measures of the model, one per orbit, by (period, least rotation)."""
    pool: List[PeriodicMeasure] = []
    for word in length_lex_words(model.n, max_length):
        if len(word) < 2:
            continue
        mu = PeriodicMeasure(word, model.n)
        if mu.canonical != word or not model.cyclic_admissible(word):
            continue
        pool.append(mu)
    return pool


def level_weight(level: Fraction, low: Fraction, high: Fraction) -> Fraction:
    """theta with theta * low + (1 - theta) * high = level."""
    return (Fraction(level) - high) / (low - high)


@dataclass(frozen=True)
class LevelSetTargets:
    phi: Phi
    a: Fraction
    b: Fraction
    mu1: PeriodicMeasure
    mu2: PeriodicMeasure
    theta1: Fraction
    theta2: Fraction
    seed: DistalSeed
    nu2: FiniteMeasure
    convex_set: Segment

    @property
    def nu1(self) -> FiniteMeasure:
        return self.seed.measure

    def describe(self) -> dict:
        n = self.mu1.alphabet_size
        return {
            "a": str(self.a),
            "b": str(self.b),
            "mu1": format_word(self.mu1.word, n),
            "mu2": format_word(self.mu2.word, n),
            "theta1": str(self.theta1),
            "theta2": str(self.theta2),
            "phi_mu1": str(self.mu1.integrate(self.phi)),
            "phi_mu2": str(self.mu2.integrate(self.phi)),
        }


def select_level_targets(
    model: ShiftModel, phi: Phi, a, b, max_length: int = POOL_LENGTH
) -> LevelSetTargets:
    """
    Choose periodic mu1, mu2 with <phi, mu1> < a <= b < <phi, mu2> and the weights hitting a and b.

    Raises:
        DomainError: if a > b or no pooled periodic measure brackets the levels
    """
    a, b = Fraction(a), Fraction(b)
    if a > b:
        raise DomainError(f"levels must satisfy a <= b, got {a} > {b}")
    pool = periodic_pool(model, max_length)
    mu1 = next((mu for mu in pool if mu.integrate(phi) < a), None)
    mu2 = next((mu for mu in pool if mu.integrate(phi) > b), None)
    if mu1 is None or mu2 is None:
        raise DomainError(
            f"levels [{a}, {b}] are outside the range achieved by periodic measures of period <= {max_length}"
        )
    low, high = mu1.integrate(phi), mu2.integrate(phi)
    theta1 = level_weight(a, low, high)
    theta2 = level_weight(b, low, high)
    seed = make_seed(mu1, mu2, theta1)
    nu2 = seed.measure if a == b else convex([(theta2, mu1), (1 - theta2, mu2)])
    return LevelSetTargets(phi, a, b, mu1, mu2, theta1, theta2, seed, nu2, Segment(seed.measure, nu2))


def _default_prefixes(stages: int) -> List[str]:
    return ["1" * stages, "2" * stages]


def level_set_family(
    model: ShiftModel,
    phi: Phi,
    a,
    b,
    stages: int = 3,
    prefixes: Optional[Iterable[Union[str, Sequence[int]]]] = None,
    horizon: Optional[int] = None,
    alpha: Optional[AlphaFunction] = None,
    open_word: Sequence[int] = (),
    eps: Optional[Fraction] = None,
    delta: Optional[Fraction] = None,
    dwell: Optional[int] = None,
    rng_seed: Optional[int] = None,
    distal_mode: DistalMode = DistalMode.PERIODIC,
) -> Tuple[ScrambleFamily, LevelSetTargets]:
    """
    Scrambled family whose phi-averages oscillate between a and b.

    Args:
        model: Mixing transition system
        phi: Cylinder observable or finite combination of cylinders
        a: Lower level
        b: Upper level
        stages: Number of schedule stages
        prefixes: Member prefixes over {1, 2} (defaults to 1...1 and 2...2)
        horizon: Realized horizon (defaults to the schedule horizon)

    Returns:
        (family, targets)
    """
    targets = select_level_targets(model, phi, a, b)
    target = saturation_target(targets.convex_set, targets.seed)
    schedule = build_schedule(
        model,
        targets.seed,
        target,
        stages,
        alpha=alpha,
        open_word=open_word,
        eps=eps,
        delta=delta,
        dwell=dwell,
        distal_mode=distal_mode,
        rng_seed=rng_seed,
    )
    family = construct_family(schedule, prefixes or _default_prefixes(stages), horizon)
    logger.info(
        "level-set family: mu1=%s mu2=%s theta1=%s theta2=%s",
        format_word(targets.mu1.word, model.n),
        format_word(targets.mu2.word, model.n),
        targets.theta1,
        targets.theta2,
    )
    return family, targets


# recurrence designs ------------------------------------------------------------

# every word of length 4 occurs once cyclically
FULL_SUPPORT_WORD = "0000100110101111"


@dataclass(frozen=True)
class RecurrenceDesign:
    """A constructed family together with the ball and the density targets it was built for."""

    kind: str
    family: ScrambleFamily
    eps: Fraction
    visit_word: Word
    banach_target: Optional[Fraction] = None
    upper_target: Optional[Fraction] = None
    upper_ceiling: Optional[Fraction] = None

    def describe(self) -> dict:
        n = self.family.model.n
        out = {
            "kind": self.kind,
            "eps": str(self.eps),
            "visit_word": format_word(self.visit_word, n),
        }
        for key in ("banach_target", "upper_target", "upper_ceiling"):
            value = getattr(self, key)
            if value is not None:
                out[key] = str(value)
        return out


def _designed_ball(model: ShiftModel, open_word: Word) -> Tuple[Fraction, Word]:
    eps = Fraction(1, model.n**4)
    m = m_epsilon(model.metric, eps)
    return eps, open_word[:1] * m


def banach_only_family(
    stages: int = 3,
    dwell: int = 32,
    prefixes: Optional[Iterable[Union[str, Sequence[int]]]] = None,
    rng_seed: Optional[int] = None,
) -> RecurrenceDesign:
    """
    Members whose returns to their initial 0000-cylinder have Banach upper density
    near 1 but vanishing prefix upper density.

    K is spanned by measures on (01)^inf and (011)^inf, whose supports omit 00, so
    the only returns are the dwell-long runs of the dense slot for 0...0.
    """
    model = TransitionSystem.full(2)
    phi = Observable.cylinder((1,))
    targets = select_level_targets(model, phi, Fraction(11, 20), Fraction(3, 5))
    if {targets.mu1.canonical, targets.mu2.canonical} != {(0, 1), (0, 1, 1)}:
        raise DomainError("recurrence design expects the 01 / 011 pair")
    open_word = (0, 0)
    target = saturation_target(targets.convex_set, targets.seed)
    schedule = build_schedule(
        model, targets.seed, target, stages, open_word=open_word, dwell=dwell, rng_seed=rng_seed
    )
    family = construct_family(schedule, prefixes or _default_prefixes(stages))
    eps, word = _designed_ball(model, open_word)
    return RecurrenceDesign(
        "banach-only", family, eps, word,
        banach_target=Fraction(1, 2), upper_ceiling=Fraction(1, 10),
    )


def upper_not_lower_family(
    stages: int = 3,
    prefixes: Optional[Iterable[Union[str, Sequence[int]]]] = None,
    rng_seed: Optional[int] = None,
) -> RecurrenceDesign:
    """
    Members whose returns to the 0000-cylinder have large prefix upper density but
    vanishing lower density.

    K = conv{nu2, nu3}: nu2 (level 3/5 on 01 / 011) never sees 00, while
    nu3 = 3/4 delta_{0^inf} + 1/4 periodic(FULL_SUPPORT_WORD) has full support and
    gives 0000 mass above 3/4.
    """
    model = TransitionSystem.full(2)
    mu1, mu2 = periodic("01", 2), periodic("011", 2)
    seed = make_seed(mu1, mu2, Fraction(2, 5))
    nu3 = convex([(Fraction(3, 4), periodic("0", 2)), (Fraction(1, 4), periodic(FULL_SUPPORT_WORD, 2))])
    target = saturation_target(Segment(seed.measure, nu3), seed)
    open_word = (0, 0)
    schedule = build_schedule(model, seed, target, stages, open_word=open_word, rng_seed=rng_seed)
    family = construct_family(schedule, prefixes or _default_prefixes(stages))
    eps, word = _designed_ball(model, open_word)
    return RecurrenceDesign("upper-not-lower", family, eps, word, upper_target=Fraction(1, 2))
