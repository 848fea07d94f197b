"""Pair statistics and density tool implementations."""

from fractions import Fraction
from typing import Any, Dict, List

import mcp.types as types

from analyzer import dc1_verdict, default_t_grid, densities, phi_prefix
from errors import SymdynError
from streams import BlockStream, BlockStreamBuilder
from symbolic import parse_word
from tools.check_model import load_model_argument
from utils.validation import validate_fraction, validate_word_text


def _eventually_periodic(word: str, tail: str, n: int) -> BlockStream:
    builder = BlockStreamBuilder(n)
    builder.append_word(parse_word(word, n))
    tail_word = parse_word(tail, n)
    return builder.append_periodic(tail_word, len(tail_word)).build()


async def analyze_pair_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Closeness fractions of two eventually periodic one-sided streams.

    Args:
        arguments: Tool arguments with 'x', 'y' (prefix words), optional 'x_tail',
            'y_tail' (repeated forever, default '0'), 't0', 'horizon' and 'model'

    Returns:
        List of content blocks with phi_prefix values and the horizon verdict or error
    """
    for name in ("x", "y"):
        if name not in arguments:
            return [types.TextContent(
                type="text",
                text=f"Error: Missing required argument '{name}'"
            )]

    model, error_msg = load_model_argument(arguments.get("model", "full2"))
    if model is None:
        return [types.TextContent(
            type="text",
            text=f"Error loading model: {error_msg}"
        )]

    for name in ("x", "y", "x_tail", "y_tail"):
        is_valid, error_msg = validate_word_text(str(arguments.get(name, "0")), model.n)
        if not is_valid:
            return [types.TextContent(type="text", text=f"Error: '{name}': {error_msg}")]

    is_valid, error_msg = validate_fraction(arguments.get("t0", "1/4"), "t0", positive=True)
    if not is_valid:
        return [types.TextContent(type="text", text=f"Error: {error_msg}")]

    try:
        horizon = int(arguments.get("horizon", 10**4))
        t0 = Fraction(str(arguments.get("t0", "1/4")))
        x = _eventually_periodic(str(arguments["x"]), str(arguments.get("x_tail", "0")), model.n)
        y = _eventually_periodic(str(arguments["y"]), str(arguments.get("y_tail", "0")), model.n)
        grid = default_t_grid(t0, model.metric.diameter(x.side))
        values = {t: phi_prefix(x, y, t, horizon, model.metric) for t in grid}
        report = dc1_verdict(x, y, t0, grid, [], [], horizon, metric=model.metric)
    except (SymdynError, ValueError) as e:
        return [types.TextContent(
            type="text",
            text=f"Error analyzing pair: {str(e)}"
        )]

    lines = [f"• phi_prefix(t={t}, n={horizon}) = {v} ≈ {float(v):.6f}" for t, v in values.items()]
    lines.append(f"• Verdict at horizon: {report.verdict.value}")
    return [types.TextContent(
        type="text",
        text=f"Pair statistics up to n={horizon}\n\n" + "\n".join(lines)
    )]


async def visit_densities_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Prefix and Banach densities of a set of visit times.

    Args:
        arguments: Tool arguments with 'visits' (list of times) and 'horizon', optional 'window_floor'

    Returns:
        List of content blocks with the four densities or error
    """
    for name in ("visits", "horizon"):
        if name not in arguments:
            return [types.TextContent(
                type="text",
                text=f"Error: Missing required argument '{name}'"
            )]

    try:
        visits = [int(v) for v in arguments["visits"]]
        floor = arguments.get("window_floor")
        profile = densities(visits, int(arguments["horizon"]), int(floor) if floor is not None else None)
    except (SymdynError, TypeError, ValueError) as e:
        return [types.TextContent(
            type="text",
            text=f"Error computing densities: {str(e)}"
        )]

    info = profile.describe()
    lines = [f"• {key.replace('_', ' ')}: {value}" for key, value in info.items()]
    lines.append(f"• Chain B_* <= d_ <= d^ <= B^*: {profile.chain_holds}")
    return [types.TextContent(
        type="text",
        text="Visit densities\n\n" + "\n".join(lines)
    )]


# Tool definitions for MCP server
ANALYZE_PAIR_TOOL = types.Tool(
    name="analyze_pair",
    title="Analyze Pair",
    description="Closeness fractions phi_prefix of two eventually periodic streams and their verdict at the horizon",
    inputSchema={
        "type": "object",
        "required": ["x", "y"],
        "properties": {
            "x": {"type": "string", "description": "Prefix word of the first stream"},
            "y": {"type": "string", "description": "Prefix word of the second stream"},
            "x_tail": {"type": "string", "description": "Word repeated after x's prefix (default: 0)"},
            "y_tail": {"type": "string", "description": "Word repeated after y's prefix (default: 0)"},
            "t0": {"type": "string", "description": "Separation level (default: 1/4)"},
            "horizon": {"type": "integer", "description": "Number of shifts counted (default: 10000)"},
            "model": {"type": "string", "description": "Model preset or JSON spec (default: full2)"},
        },
    },
)

VISIT_DENSITIES_TOOL = types.Tool(
    name="visit_densities",
    title="Visit Densities",
    description="Upper, lower and Banach densities of a set of visit times up to a horizon",
    inputSchema={
        "type": "object",
        "required": ["visits", "horizon"],
        "properties": {
            "visits": {"type": "array", "items": {"type": "integer"}, "description": "Visit times in [1, horizon]"},
            "horizon": {"type": "integer", "description": "Last time considered"},
            "window_floor": {"type": "integer", "description": "Shortest Banach window (default: 16)"},
        },
    },
)
