"""Configuration-driven runs.

A run executes one command against one model, writes its artifacts into the output
directory and a manifest beside them: the config echo, package versions, the
invariant summary and a sha256 of every emitted file. Identical configs give
byte-identical directories.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import mpmath
from mcp.server.fastmcp.utilities.logging import get_logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from alphas import get_alpha
from analyzer import (
    Checkpoint,
    Verdict,
    birkhoff_oscillation,
    cumulative_distance,
    dc1_verdict,
    default_t_grid,
    family_report,
    polynomial_report,
    recurrence_profile,
)
from beta import BetaModel, expansion_residual, nested_beta_family
from distal import DistalMode, make_seed
from errors import CapabilityError, ConfigError, DomainError, InvariantError, SymdynError
from level_sets import banach_only_family, level_set_family, upper_not_lower_family
from measures import Polygon, Segment, empirical, parse_measure, weak_star_distance
from model_manager import get_model_manager
from polynomial import polynomial_construction, verify_polynomial_schedule
from scramble import (
    ScrambleFamily,
    backward_trace,
    build_schedule,
    construct_family,
    saturation_target,
    verify_schedule,
    verify_tracing,
)
from settings import get_settings
from streams import BlockStream, BlockStreamBuilder
from subshifts import ShiftModel, TransitionSystem
from symbolic import Observable, ShiftMetric, Side, parse_word
from utils.formatting import format_decomposition, format_expansion, format_model_info, format_value
from utils.serialization import csv_text, dumps, rle_to_stream, sha256_file, stream_to_rle
from utils.validation import validate_config_path, validate_output_dir, validate_prefixes

logger = get_logger(__name__)

MANIFEST = "manifest.json"
VERSION_PACKAGES = ("symdyn-mcp", "mcp", "numpy", "networkx", "mpmath", "sympy", "pydantic")


class Command(str, Enum):
    CHECK = "check"
    DECOMPOSE = "decompose"
    CONSTRUCT_DC1 = "construct-dc1"
    CONSTRUCT_LEVEL_SET = "construct-level-set"
    CONSTRUCT_RECURRENCE = "construct-recurrence"
    CONSTRUCT_POLYNOMIAL = "construct-polynomial"
    ANALYZE_PAIR = "analyze-pair"
    BETA_EXPAND = "beta-expand"
    REPORT = "report"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SeedParams(_Params):
    mu1: Dict[str, Any] = Field(default_factory=lambda: {"periodic": "01"})
    mu2: Optional[Dict[str, Any]] = None
    theta: str = "1"


class BackwardParams(_Params):
    z: str = "0"
    eps: str = "1"


class ConstructParams(_Params):
    seed: SeedParams = Field(default_factory=SeedParams)
    k_extra: List[Dict[str, Any]] = Field(default_factory=list)
    prefixes: Optional[List[str]] = None
    open_word: str = ""
    eps: Optional[str] = None
    delta: Optional[str] = None
    dwell: Optional[int] = Field(None, ge=0)
    distal_mode: DistalMode = DistalMode.PERIODIC
    t_grid: List[str] = Field(default_factory=list)
    backward: Optional[BackwardParams] = None


class LevelSetParams(_Params):
    phi: str = "1"
    a: str = "1/4"
    b: str = "1/2"
    tol: str = "1/20"
    prefixes: Optional[List[str]] = None
    open_word: str = ""
    eps: Optional[str] = None
    delta: Optional[str] = None
    dwell: Optional[int] = Field(None, ge=0)
    distal_mode: DistalMode = DistalMode.PERIODIC


class RecurrenceParams(_Params):
    design: Literal["banach-only", "upper-not-lower"] = "banach-only"
    dwell: int = Field(32, ge=0)
    prefixes: Optional[List[str]] = None
    eps_grid: List[str] = Field(default_factory=list)


class PolynomialParams(_Params):
    prefixes: Optional[List[str]] = None


class CheckpointParams(_Params):
    n: int = Field(ge=1)
    bound: str
    t: Optional[str] = None


class StreamParams(_Params):
    """A stream literal: `past` repeats before index 0 (two-sided), then `word`, then `tail` forever."""

    word: str = ""
    tail: str = "0"
    past: Optional[str] = None
    file: Optional[Path] = None


class BirkhoffParams(_Params):
    phi: str = "1"
    n_grid: List[int] = Field(default_factory=list)
    a: Optional[str] = None
    b: Optional[str] = None


class AnalyzePairParams(_Params):
    x: StreamParams
    y: StreamParams
    side: Side = Side.ONE
    metric: Literal["geometric", "polynomial"] = "geometric"
    t0: str = "1/4"
    t_grid: List[str] = Field(default_factory=list)
    separation: List[CheckpointParams] = Field(default_factory=list)
    closeness: List[CheckpointParams] = Field(default_factory=list)
    cumulative: List[int] = Field(default_factory=list)
    birkhoff: Optional[BirkhoffParams] = None
    eps_grid: List[str] = Field(default_factory=list)


class BetaExpandParams(_Params):
    values: List[str] = Field(default_factory=lambda: ["1/2"])
    depth: int = Field(40, ge=1)
    nested: int = Field(0, ge=0)


class ReportParams(_Params):
    input: Path


PARAMS: Dict[Command, type] = {
    Command.CHECK: _Params,
    Command.DECOMPOSE: _Params,
    Command.CONSTRUCT_DC1: ConstructParams,
    Command.CONSTRUCT_LEVEL_SET: LevelSetParams,
    Command.CONSTRUCT_RECURRENCE: RecurrenceParams,
    Command.CONSTRUCT_POLYNOMIAL: PolynomialParams,
    Command.ANALYZE_PAIR: AnalyzePairParams,
    Command.BETA_EXPAND: BetaExpandParams,
    Command.REPORT: ReportParams,
}


class RunConfig(BaseModel):
    """One reproducible run."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    model: Union[str, Dict[str, Any]] = "full2"
    out: Path = Path("runs/out")
    alpha: Optional[Union[str, Dict[str, Any]]] = None
    stages: int = Field(3, ge=1)
    horizon: Optional[int] = Field(None, ge=1)
    precision: Optional[int] = Field(None, ge=16)
    rng_seed: int = Field(0, ge=0, lt=2**64)
    format: OutputFormat = OutputFormat.JSON
    params: Dict[str, Any] = Field(default_factory=dict)

    def command_params(self) -> BaseModel:
        try:
            return PARAMS[self.command].model_validate(self.params)
        except ValidationError as exc:
            raise ConfigError(f"invalid parameters for {self.command.value}: {_first_error(exc)}") from exc


def _first_error(exc: ValidationError) -> str:
    err = exc.errors()[0]
    where = ".".join(str(p) for p in err["loc"])
    return f"{where}: {err['msg']}" if where else err["msg"]


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Read a JSON run config and apply flag overrides.

    Args:
        path: Config file (optional when the overrides name a command)
        overrides: Field values that replace the file's; None values are ignored

    Raises:
        ConfigError: unreadable file or invalid config
    """
    data: Dict[str, Any] = {}
    if path:
        is_valid, error_msg = validate_config_path(path)
        if not is_valid:
            raise ConfigError(error_msg)
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid run config: {_first_error(exc)}") from exc


@dataclass
class CommandResult:
    """What a command hands back for writing: artifacts, invariant summary and failures."""

    summary: Dict[str, Any] = field(default_factory=dict)
    invariants: Dict[str, Any] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    documents: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, Tuple[Any, List[List[str]]]] = field(default_factory=dict)
    streams: Dict[str, BlockStream] = field(default_factory=dict)
    stream_range: Dict[str, Tuple[int, int]] = field(default_factory=dict)


# helpers -------------------------------------------------------------------


def _fraction(text: Optional[str]) -> Optional[Fraction]:
    if text is None:
        return None
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"'{text}' is not a rational number") from exc


def _model(config: RunConfig) -> ShiftModel:
    return get_model_manager().require_model(config.model, config.precision)


def _seed(params: SeedParams, n: int):
    mu1 = parse_measure(params.mu1, n)
    mu2 = parse_measure(params.mu2, n) if params.mu2 is not None else mu1
    return make_seed(mu1, mu2, _fraction(params.theta))


def _prefixes(prefixes: Optional[List[str]], stages: int) -> List[str]:
    if prefixes is None:
        return ["1" * stages, "2" * stages]
    is_valid, error_msg = validate_prefixes(prefixes, stages)
    if not is_valid:
        raise ConfigError(error_msg)
    return prefixes


def _cylinder(text: str, n: int) -> Observable:
    return Observable.cylinder(parse_word(text, n))


def _stream(spec: StreamParams, n: int, side: Side) -> BlockStream:
    if spec.file is not None:
        return rle_to_stream(json.loads(spec.file.read_text(encoding="utf-8")))
    builder = BlockStreamBuilder(n, side, start=1 if side is Side.ONE else 0)
    if spec.past:
        if side is not Side.TWO:
            raise DomainError("a past word needs a two-sided stream")
        past = parse_word(spec.past, n)
        builder = BlockStreamBuilder(n, side, start=-len(past))
        builder.append_word(past)
    builder.append_word(parse_word(spec.word, n))
    tail = parse_word(spec.tail, n)
    if not tail:
        raise DomainError("a stream literal needs a nonempty tail")
    builder.append_periodic(tail, len(tail))
    return builder.build()


def _stream_start(x: BlockStream) -> int:
    if x.side is Side.ONE:
        return 1
    return min(0, x.store.starts[0] - x.offset)


def _add_member_streams(result: CommandResult, members: Dict[Tuple[int, ...], BlockStream], horizon: int) -> None:
    for key, member in sorted(members.items()):
        name = "".join(map(str, key))
        result.streams[name] = member
        result.stream_range[name] = (_stream_start(member), horizon)


def _add_reports(result: CommandResult, reports, expected: Verdict) -> None:
    rows: List[List[str]] = []
    for report in reports:
        body = report.csv_rows()
        rows.extend(body if not rows else body[1:])
        failed = [r for r in report.rows if r.kind != "tail" and not r.passed]
        for r in failed:
            result.failures.append(f"pair {report.pair}: {r.kind} at n={r.n}, t={r.t}: {r.value} vs {r.bound}")
        if report.verdict is not expected:
            result.failures.append(f"pair {report.pair}: verdict {report.verdict.value}")
        for check in report.implications:
            if not check.holds:
                result.failures.append(f"pair {report.pair}: alpha => plain fails at n={check.n}")
    result.tables["reports"] = ([r.to_dict() for r in reports], rows)
    result.summary["verdicts"] = {r.pair: r.verdict.value for r in reports}


# commands ------------------------------------------------------------------


def _check(config: RunConfig) -> CommandResult:
    model = _model(config)
    info = format_model_info(model)
    if info.get("mixing"):
        try:
            info["specification_constant"] = model.specification_constant(get_settings().default_eps)
        except CapabilityError as e:
            info["specification_constant"] = None
            logger.warning("no specification constant: %s", e)
    keys = ("kind", "n", "transitive", "primitivity_index", "period", "mixing")
    return CommandResult(
        summary={k: info[k] for k in keys if k in info},
        invariants={"model_built": True},
        documents={"model": info},
    )


def _decompose(config: RunConfig) -> CommandResult:
    model = _model(config)
    if not isinstance(model, TransitionSystem):
        raise CapabilityError("periodic decomposition is defined for transition systems")
    decomposition = model.cyclic_classes()
    info = format_decomposition(model, decomposition)
    failures: List[str] = []

    covered = [s for members in decomposition.classes for s in members]
    if sorted(covered) != model.essential_list or len(covered) != len(set(covered)):
        failures.append("cyclic classes do not partition the essential symbols")
    p = decomposition.period
    for a, b in model.graph.subgraph(model.essential).edges():
        if decomposition.class_of(b) != (decomposition.class_of(a) + 1) % p:
            failures.append(f"edge {a}->{b} does not advance the cyclic class")
            break
    if not info["class_power_primitive"]:
        failures.append("A^p is not primitive on every class")

    return CommandResult(
        summary={"period": p, "classes": info["classes"]},
        invariants={"partition": not failures, "class_power_primitive": info["class_power_primitive"]},
        failures=failures,
        documents={"classes": info},
    )


def _verify_family(result: CommandResult, family: ScrambleFamily) -> None:
    result.invariants["schedule"] = verify_schedule(family.schedule)
    result.invariants["traced_slots"] = verify_tracing(family)


def _construct_dc1(config: RunConfig) -> CommandResult:
    params: ConstructParams = config.command_params()
    model = _model(config)
    seed = _seed(params.seed, model.n)
    extra = [parse_measure(m, model.n) for m in params.k_extra]
    if not extra:
        convex_set = Segment(seed.measure, seed.measure)
    elif len(extra) == 1:
        convex_set = Segment(seed.measure, extra[0])
    else:
        convex_set = Polygon((seed.measure, *extra))
    alpha = get_alpha(config.alpha)
    schedule = build_schedule(
        model,
        seed,
        saturation_target(convex_set, seed),
        config.stages,
        alpha=alpha,
        open_word=parse_word(params.open_word, model.n),
        eps=_fraction(params.eps),
        delta=_fraction(params.delta),
        dwell=params.dwell,
        distal_mode=params.distal_mode,
        rng_seed=config.rng_seed,
    )
    family = construct_family(schedule, _prefixes(params.prefixes, config.stages), config.horizon)
    result = CommandResult(documents={"schedule": schedule.describe(), "family": family.describe()})
    _verify_family(result, family)
    result.documents["checkpoints"] = format_value(schedule.checkpoint_table())

    grid = [_fraction(t) for t in params.t_grid] or None
    reports = [family_report(family, u, v, alpha=alpha, t_grid=grid) for u, v in family.pairs()]
    _add_reports(result, reports, Verdict.ALPHA_DC1 if alpha else Verdict.DC1)
    _add_member_streams(result, family.members, family.horizon)

    if params.backward is not None:
        z = BlockStream.periodic(parse_word(params.backward.z, model.n), model.n, Side.TWO)
        traced = backward_trace(family, z, _fraction(params.backward.eps))
        result.documents["backward"] = traced.describe()
        for key, member in sorted(traced.members.items()):
            name = "two-sided-" + "".join(map(str, key))
            result.streams[name] = member
            result.stream_range[name] = (_stream_start(member), traced.horizon)

    result.summary.update({"members": len(family.members), "zeta": str(family.zeta)})
    return result


def _tracking_rows(family: ScrambleFamily) -> List[Dict[str, Any]]:
    """Weak* distance of each member's empirical measure to the measure scheduled at every tracking checkpoint."""
    schedule = family.schedule
    K = get_settings().truncation_depth
    rows = []
    for key, member in sorted(family.members.items()):
        for k in range(1, schedule.stage_count + 1):
            stage = schedule.stage(k)
            bound = 4 * stage.eps + 2 * stage.delta + Fraction(1, 2**K)
            for group in range(1, k + 1):
                time, target = schedule.tracking_checkpoint(group, k)
                value, _ = weak_star_distance(empirical(member, time, K), target, K)
                rows.append({
                    "member": "".join(map(str, key)),
                    "stage": k,
                    "group": group,
                    "time": str(time),
                    "distance": str(value),
                    "bound": str(bound),
                    "passed": value <= bound,
                })
    return rows


def _construct_level_set(config: RunConfig) -> CommandResult:
    params: LevelSetParams = config.command_params()
    model = _model(config)
    phi = _cylinder(params.phi, model.n)
    a, b = _fraction(params.a), _fraction(params.b)
    family, targets = level_set_family(
        model,
        phi,
        a,
        b,
        stages=config.stages,
        prefixes=_prefixes(params.prefixes, config.stages),
        horizon=config.horizon,
        alpha=get_alpha(config.alpha),
        open_word=parse_word(params.open_word, model.n),
        eps=_fraction(params.eps),
        delta=_fraction(params.delta),
        dwell=params.dwell,
        rng_seed=config.rng_seed,
        distal_mode=params.distal_mode,
    )
    result = CommandResult(documents={"targets": targets.describe(), "family": family.describe()})
    _verify_family(result, family)

    tracking = _tracking_rows(family)
    for row in tracking:
        if not row["passed"]:
            result.failures.append(
                f"member {row['member']} misses its tracking bound at {row['time']}: {row['distance']}"
            )
    tracking_csv = [["member", "stage", "group", "time", "distance", "bound", "passed"]] + [
        [r["member"], r["stage"], r["group"], r["time"], r["distance"], r["bound"], str(r["passed"]).lower()]
        for r in tracking
    ]
    result.tables["tracking"] = (tracking, tracking_csv)

    grid = family.schedule.birkhoff_grid()
    birkhoff: Dict[str, Any] = {}
    curve = [["member", "n", "average"]]
    for key, member in sorted(family.members.items()):
        name = "".join(map(str, key))
        report = birkhoff_oscillation(member, phi, grid, a, b, _fraction(params.tol))
        birkhoff[name] = report.describe()
        curve.extend([name, str(n), str(v)] for n, v in report.averages)
    result.tables["birkhoff"] = (birkhoff, curve)
    result.invariants["tracking_checks"] = len(tracking)
    result.summary.update({
        "members": len(family.members),
        "birkhoff": {k: v["verdict"] for k, v in birkhoff.items()},
    })
    _add_member_streams(result, family.members, family.horizon)
    return result


def _construct_recurrence(config: RunConfig) -> CommandResult:
    params: RecurrenceParams = config.command_params()
    prefixes = _prefixes(params.prefixes, config.stages)
    if params.design == "banach-only":
        design = banach_only_family(config.stages, params.dwell, prefixes, config.rng_seed)
    else:
        design = upper_not_lower_family(config.stages, prefixes, config.rng_seed)
    family = design.family
    result = CommandResult(documents={"design": design.describe(), "family": family.describe()})
    _verify_family(result, family)

    eps_grid = [_fraction(e) for e in params.eps_grid] or [design.eps]
    checkpoints = family.schedule.birkhoff_grid()
    horizon = config.horizon or family.horizon
    profiles: Dict[str, Any] = {}
    curve = [["member", "eps", "n", "visits", "density"]]
    for key, member in sorted(family.members.items()):
        name = "".join(map(str, key))
        profile = recurrence_profile(member, eps_grid, horizon, [n for n in checkpoints if n <= horizon])
        profiles[name] = profile.describe()
        for row in profile.rows:
            curve.extend(
                [name, str(row.eps), str(n), str(c), str(Fraction(c, n))] for n, c in row.grid_counts.items()
            )
            if row.eps != design.eps:
                continue
            ratios = [Fraction(c, n) for n, c in row.grid_counts.items()]
            tail_upper = max(ratios[len(ratios) // 2 :])
            profiles[name]["designed"] = {"tail_upper": str(tail_upper)}
            if design.banach_target is not None and row.profile.banach_upper < design.banach_target:
                result.failures.append(f"member {name}: Banach upper density {row.profile.banach_upper}")
            if design.upper_ceiling is not None and tail_upper > design.upper_ceiling:
                result.failures.append(f"member {name}: prefix upper density {tail_upper}")
            if design.upper_target is not None and tail_upper < design.upper_target:
                result.failures.append(f"member {name}: prefix upper density {tail_upper}")
    result.tables["recurrence"] = (profiles, curve)
    result.summary.update({"design": design.kind, "members": len(family.members)})
    _add_member_streams(result, family.members, family.horizon)
    return result


def _construct_polynomial(config: RunConfig) -> CommandResult:
    params: PolynomialParams = config.command_params()
    alpha = get_alpha(config.alpha or "sqrt")
    family = polynomial_construction(
        alpha, _prefixes(params.prefixes, config.stages), config.stages, config.horizon
    )
    result = CommandResult(
        documents={"family": family.describe()},
        invariants={"polynomial_schedule": verify_polynomial_schedule(family.schedule)},
    )
    reports = [polynomial_report(family, u, v) for u, v in family.pairs()]
    _add_reports(result, reports, Verdict.ALPHA_DC1)
    result.summary.update({"members": len(family.members), "alpha": alpha.name})
    _add_member_streams(result, family.members, family.horizon)
    return result


def _analyze_pair(config: RunConfig) -> CommandResult:
    params: AnalyzePairParams = config.command_params()
    model = _model(config)
    x = _stream(params.x, model.n, params.side)
    y = _stream(params.y, model.n, params.side)
    metric = ShiftMetric.polynomial() if params.metric == "polynomial" else model.metric
    separation = [Checkpoint(c.n, _fraction(c.bound), _fraction(c.t)) for c in params.separation]
    closeness = [Checkpoint(c.n, _fraction(c.bound), _fraction(c.t)) for c in params.closeness]
    horizon = config.horizon or max([cp.n for cp in separation + closeness] or [10**4])
    t0 = _fraction(params.t0)
    grid = default_t_grid(t0, metric.diameter(params.side), [_fraction(t) for t in params.t_grid])
    alpha = get_alpha(config.alpha)
    report = dc1_verdict(x, y, t0, grid, separation, closeness, horizon, alpha=alpha, metric=metric)
    result = CommandResult(summary={"verdict": report.verdict.value})
    result.tables["report"] = (report.to_dict(), report.csv_rows())

    if params.cumulative:
        rows = [["n", "lower", "upper", "alpha", "ratio_lower"]]
        for n in params.cumulative:
            lo, hi = cumulative_distance(x, y, n, metric)
            weight = alpha(n) if alpha else None
            ratio = str(lo / weight) if weight else ""
            rows.append([str(n), str(lo), str(hi), "" if weight is None else str(weight), ratio])
        result.tables["cumulative"] = ({"rows": rows[1:]}, rows)

    if params.birkhoff is not None:
        phi = _cylinder(params.birkhoff.phi, model.n)
        n_grid = params.birkhoff.n_grid or [horizon * j // 8 for j in range(1, 9)]
        birkhoff = birkhoff_oscillation(
            x, phi, n_grid, _fraction(params.birkhoff.a), _fraction(params.birkhoff.b)
        )
        rows = [["n", "average"]] + [[str(n), str(v)] for n, v in birkhoff.averages]
        result.tables["birkhoff"] = (birkhoff.describe(), rows)

    if params.eps_grid:
        profile = recurrence_profile(x, [_fraction(e) for e in params.eps_grid], horizon)
        if not all(row.profile.chain_holds for row in profile.rows):
            result.failures.append("density chain violated")
        rows = [["eps", "upper", "lower", "banach_upper", "banach_lower"]] + [
            [str(r.eps), str(r.profile.upper), str(r.profile.lower),
             str(r.profile.banach_upper), str(r.profile.banach_lower)]
            for r in profile.rows
        ]
        result.tables["recurrence"] = (profile.describe(), rows)
        result.invariants["density_chain"] = not result.failures
    return result


def _beta_expand(config: RunConfig) -> CommandResult:
    params: BetaExpandParams = config.command_params()
    model = _model(config)
    if not isinstance(model, BetaModel):
        raise CapabilityError("beta-expand needs a beta model")
    expansions = []
    failures = []
    with mpmath.workdps(60):
        beta = mpmath.mpf(model.numeric(70))
        for value in params.values:
            digits = model.expand(value, params.depth)
            info = format_expansion(model, value, digits)
            residual = expansion_residual(model, value, digits)
            info["residual"] = mpmath.nstr(residual, 10)
            if not 0 <= residual <= beta ** (-params.depth):
                failures.append(f"expansion of {value} leaves residual {info['residual']}")
            expansions.append(info)
    result = CommandResult(
        summary={"beta": str(model.beta), "expansions": len(expansions)},
        invariants={"reconstruction_checks": len(expansions)},
        failures=failures,
        documents={"model": format_model_info(model), "expansions": expansions},
    )
    if params.nested:
        family = nested_beta_family(model, params.nested)
        result.documents["nested"] = [m.describe() for m in family]
        result.invariants["nested_inclusions"] = len(family)
    return result


def _report(config: RunConfig) -> CommandResult:
    params: ReportParams = config.command_params()
    manifest_path = params.input / MANIFEST
    if not manifest_path.is_file():
        raise ConfigError(f"no manifest in {params.input}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    failures = []
    for name, digest in sorted(manifest.get("outputs", {}).items()):
        path = params.input / name
        if not path.is_file() or sha256_file(path) != digest:
            failures.append(f"output {name} is missing or changed")
    rows = [["pair", "verdict"]] + [[p, v] for p, v in sorted(manifest.get("summary", {}).get("verdicts", {}).items())]
    summary = {
        "source_command": manifest.get("command"),
        "source_status": manifest.get("status"),
        "outputs": len(manifest.get("outputs", {})),
    }
    result = CommandResult(summary=summary, invariants={"hashes_verified": not failures}, failures=failures)
    result.tables["summary"] = ({**summary, "verdicts": manifest.get("summary", {}).get("verdicts", {})}, rows)
    return result


HANDLERS: Dict[Command, Callable[[RunConfig], CommandResult]] = {
    Command.CHECK: _check,
    Command.DECOMPOSE: _decompose,
    Command.CONSTRUCT_DC1: _construct_dc1,
    Command.CONSTRUCT_LEVEL_SET: _construct_level_set,
    Command.CONSTRUCT_RECURRENCE: _construct_recurrence,
    Command.CONSTRUCT_POLYNOMIAL: _construct_polynomial,
    Command.ANALYZE_PAIR: _analyze_pair,
    Command.BETA_EXPAND: _beta_expand,
    Command.REPORT: _report,
}


# writing -------------------------------------------------------------------


def package_versions(names: Sequence[str] = VERSION_PACKAGES) -> Dict[str, str]:
    versions = {}
    for name in names:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not-installed"
    return versions


def _write(out: Path, relative: str, text: str, outputs: Dict[str, str]) -> None:
    path = out / relative
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    outputs[relative] = sha256_file(path)


def write_artifacts(config: RunConfig, result: CommandResult) -> Dict[str, str]:
    """Write documents, tables and streams; returns relative path -> sha256."""
    out = config.out
    outputs: Dict[str, str] = {}
    for name, document in sorted(result.documents.items()):
        _write(out, f"{name}.json", dumps(format_value(document)), outputs)
    for name, (document, rows) in sorted(result.tables.items()):
        if config.format is OutputFormat.CSV:
            _write(out, f"{name}.csv", csv_text(rows), outputs)
        else:
            _write(out, f"{name}.json", dumps(format_value(document)), outputs)
    for name, stream in sorted(result.streams.items()):
        lo, hi = result.stream_range[name]
        _write(out, f"streams/{name}.json", dumps(stream_to_rle(stream, lo, hi)), outputs)
    return outputs


def write_manifest(
    config: RunConfig,
    status: str,
    exit_code: int,
    result: Optional[CommandResult] = None,
    outputs: Optional[Dict[str, str]] = None,
    error: Optional[str] = None,
) -> Path:
    manifest = {
        "command": config.command.value,
        "config": config.model_dump(mode="json"),
        "versions": package_versions(),
        "status": status,
        "exit_code": exit_code,
        "invariants": format_value(result.invariants) if result else {},
        "failures": result.failures if result else [],
        "summary": format_value(result.summary) if result else {},
        "outputs": outputs or {},
    }
    if error is not None:
        manifest["error"] = error
    path = config.out / MANIFEST
    path.write_text(dumps(manifest), encoding="utf-8")
    return path


def run(config: RunConfig) -> int:
    """
    Execute a run and write its artifacts and manifest.

    Returns:
        Exit status: 0 on success, 2 config/domain errors, 3 precision, 4 budget,
        5 failed invariant checks
    """
    is_valid, error_msg = validate_output_dir(str(config.out))
    if not is_valid:
        logger.error("%s", error_msg)
        return ConfigError.exit_code
    config.out.mkdir(parents=True, exist_ok=True)

    result: Optional[CommandResult] = None
    try:
        result = HANDLERS[config.command](config)
        if result.failures:
            raise InvariantError(f"{len(result.failures)} invariant checks failed")
    except InvariantError as e:
        outputs: Dict[str, str] = {}
        if result is not None:
            # reports stay for inspection; streams are only emitted once verified
            result.streams.clear()
            outputs = write_artifacts(config, result)
        path = write_manifest(config, "invariant-failure", e.exit_code, result, outputs, str(e))
        logger.error("run failed: %s (manifest %s)", e, path)
        return e.exit_code
    except SymdynError as e:
        write_manifest(config, "error", e.exit_code, error=str(e))
        logger.error("run failed: %s", e)
        return e.exit_code

    outputs = write_artifacts(config, result)
    path = write_manifest(config, "ok", 0, result, outputs)
    logger.info("run %s finished: exit 0, manifest %s", config.command.value, path)
    return 0
