"""Scrambled-family construction tool implementations."""

from fractions import Fraction
from typing import Any, Dict, List

import mcp.types as types

from alphas import get_alpha
from analyzer import family_report, polynomial_report
from distal import make_seed
from errors import SymdynError
from level_sets import level_set_family
from measures import Segment, periodic
from polynomial import polynomial_construction
from scramble import build_schedule, construct_family, saturation_target
from symbolic import Observable, parse_word
from tools.check_model import load_model_argument
from utils.validation import validate_fraction, validate_word_text

# constructions from the tool surface stay small enough to answer interactively
MAX_TOOL_STAGES = 4


def _stages(arguments: Dict[str, Any], default: int = 2) -> int:
    stages = int(arguments.get("stages", default))
    if not 1 <= stages <= MAX_TOOL_STAGES:
        raise ValueError(f"'stages' must lie in 1..{MAX_TOOL_STAGES}")
    return stages


def _summary_lines(family_info: Dict[str, Any], reports) -> List[str]:
    lines = [f"• Members: {', '.join(family_info['members'])}"]
    if "zeta" in family_info:
        lines.append(f"• Separation constant zeta: {family_info['zeta']}")
        lines.append(f"• t0: {family_info['t0']}")
    lines.append(f"• Horizon: {len(family_info['horizon'])}-digit index")
    for report in reports:
        passed = sum(1 for r in report.rows if r.kind != "tail" and r.passed)
        checked = sum(1 for r in report.rows if r.kind != "tail")
        lines.append(f"• Pair {report.pair}: {report.verdict.value} ({passed}/{checked} checkpoint rows)")
    return lines


async def construct_dc1_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Build a DC1 (or alpha-DC1) scrambled family and read its verdicts.

    Args:
        arguments: Tool arguments with optional 'model', 'seed_word', 'stages', 'alpha'

    Returns:
        List of content blocks with the family summary or error
    """
    try:
        stages = _stages(arguments)
    except ValueError as e:
        return [types.TextContent(type="text", text=f"Error: {str(e)}")]

    model, error_msg = load_model_argument(arguments.get("model", "full2"))
    if model is None:
        return [types.TextContent(
            type="text",
            text=f"Error loading model: {error_msg}"
        )]

    is_valid, error_msg = validate_word_text(str(arguments.get("seed_word", "01")), model.n)
    if not is_valid:
        return [types.TextContent(type="text", text=f"Error: 'seed_word': {error_msg}")]

    try:
        alpha = get_alpha(arguments.get("alpha"))
        mu = periodic(str(arguments.get("seed_word", "01")), model.n)
        seed = make_seed(mu, mu)
        target = saturation_target(Segment(seed.measure, seed.measure), seed)
        schedule = build_schedule(model, seed, target, stages, alpha=alpha)
        family = construct_family(schedule, ["1" * stages, "2" * stages])
        reports = [family_report(family, u, v, alpha=alpha) for u, v in family.pairs()]
    except SymdynError as e:
        return [types.TextContent(
            type="text",
            text=f"Error constructing family: {str(e)}"
        )]

    lines = _summary_lines(family.describe(), reports)
    return [types.TextContent(
        type="text",
        text=f"Constructed {'alpha-' if alpha else ''}DC1 family with {stages} stages\n\n" + "\n".join(lines)
    )]


async def construct_level_set_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Build a level-set family whose Birkhoff averages of a cylinder oscillate between a and b.

    Args:
        arguments: Tool arguments with 'a', 'b' and optional 'phi', 'model', 'stages'

    Returns:
        List of content blocks with the chosen periodic measures and weights or error
    """
    for name in ("a", "b"):
        if name not in arguments:
            return [types.TextContent(
                type="text",
                text=f"Error: Missing required argument '{name}'"
            )]

    for name in ("a", "b"):
        is_valid, error_msg = validate_fraction(arguments[name], name)
        if not is_valid:
            return [types.TextContent(type="text", text=f"Error: {error_msg}")]

    try:
        stages = _stages(arguments)
        a, b = Fraction(str(arguments["a"])), Fraction(str(arguments["b"]))
    except ValueError as e:
        return [types.TextContent(type="text", text=f"Error: {str(e)}")]

    model, error_msg = load_model_argument(arguments.get("model", "full2"))
    if model is None:
        return [types.TextContent(
            type="text",
            text=f"Error loading model: {error_msg}"
        )]

    try:
        phi = Observable.cylinder(parse_word(str(arguments.get("phi", "1")), model.n))
        family, targets = level_set_family(model, phi, a, b, stages=stages)
    except SymdynError as e:
        return [types.TextContent(
            type="text",
            text=f"Error constructing level-set family: {str(e)}"
        )]

    info = targets.describe()
    lines = [f"• {key.replace('_', ' ')}: {value}" for key, value in info.items()]
    lines.extend(_summary_lines(family.describe(), []))
    return [types.TextContent(
        type="text",
        text=f"Constructed level-set family for [{a}, {b}]\n\n" + "\n".join(lines)
    )]


async def construct_polynomial_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Build the alpha-scrambled family under the polynomial metric.

    Args:
        arguments: Tool arguments with optional 'alpha' (default sqrt) and 'stages'

    Returns:
        List of content blocks with the stage times and verdicts or error
    """
    try:
        stages = _stages(arguments, default=3)
    except ValueError as e:
        return [types.TextContent(type="text", text=f"Error: {str(e)}")]

    try:
        alpha = get_alpha(arguments.get("alpha", "sqrt"))
        family = polynomial_construction(alpha, ["1" * stages, "2" * stages], stages)
        reports = [polynomial_report(family, u, v) for u, v in family.pairs()]
    except SymdynError as e:
        return [types.TextContent(
            type="text",
            text=f"Error constructing polynomial family: {str(e)}"
        )]

    lines = _summary_lines(family.describe(), reports)
    for stage in family.schedule.stages:
        lines.append(f"• Stage {stage.k}: a has {len(str(stage.a))} digits, d^k has {len(str(stage.end))} digits")
    return [types.TextContent(
        type="text",
        text=f"Constructed polynomial-metric family for alpha '{alpha.name}'\n\n" + "\n".join(lines)
    )]


_STAGES_PROPERTY = {
    "type": "integer",
    "description": f"Number of construction stages (1..{MAX_TOOL_STAGES})",
}

# Tool definitions for MCP server
CONSTRUCT_DC1_TOOL = types.Tool(
    name="construct_dc1",
    title="Construct DC1 Family",
    description="Build a distributionally scrambled family by specification tracing and check its checkpoints",
    inputSchema={
        "type": "object",
        "properties": {
            "model": {"type": "string", "description": "Mixing model preset or JSON spec (default: full2)"},
            "seed_word": {"type": "string", "description": "Cycle word of the distal seed measure (default: 01)"},
            "stages": _STAGES_PROPERTY,
            "alpha": {"type": "string", "description": "Alpha name for the alpha-DC1 variant (sqrt, cbrt, log, log2)"},
        },
    },
)

CONSTRUCT_LEVEL_SET_TOOL = types.Tool(
    name="construct_level_set",
    title="Construct Level-Set Family",
    description="Build a scrambled family whose Birkhoff averages of a cylinder have liminf a and limsup b",
    inputSchema={
        "type": "object",
        "required": ["a", "b"],
        "properties": {
            "a": {"type": "string", "description": "Lower level (rational)"},
            "b": {"type": "string", "description": "Upper level (rational, at least a)"},
            "phi": {"type": "string", "description": "Cylinder word of the observable (default: 1)"},
            "model": {"type": "string", "description": "Mixing model preset or JSON spec (default: full2)"},
            "stages": _STAGES_PROPERTY,
        },
    },
)

CONSTRUCT_POLYNOMIAL_TOOL = types.Tool(
    name="construct_polynomial",
    title="Construct Polynomial-Metric Family",
    description="Build the alpha-scrambled family on the two-sided 2-shift under the polynomial metric",
    inputSchema={
        "type": "object",
        "properties": {
            "alpha": {"type": "string", "description": "Alpha name growing faster than ln n (default: sqrt)"},
            "stages": _STAGES_PROPERTY,
        },
    },
)
