"""Beta-expansion tool implementation."""

from typing import Any, Dict, List

import mcp.types as types

from beta import expansion_residual
from errors import SymdynError
from model_manager import get_model_manager
from utils.formatting import format_expansion, format_info_text


async def beta_expand_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Greedy beta-expansion of x in [0, 1).

    Args:
        arguments: Tool arguments containing 'beta', 'x' and optional 'depth'

    Returns:
        List of content blocks with the digits or error
    """
    for name in ("beta", "x"):
        if name not in arguments:
            return [types.TextContent(
                type="text",
                text=f"Error: Missing required argument '{name}'"
            )]

    try:
        depth = int(arguments.get("depth", 40))
    except (TypeError, ValueError):
        return [types.TextContent(type="text", text="Error: 'depth' must be an integer")]
    if depth < 1:
        return [types.TextContent(type="text", text="Error: 'depth' must be positive")]

    model, error_msg = get_model_manager().load_model({"kind": "beta", "beta": str(arguments["beta"])})
    if model is None:
        return [types.TextContent(
            type="text",
            text=f"Error loading beta model: {error_msg}"
        )]

    try:
        x = str(arguments["x"])
        digits = model.expand(x, depth)
        info = format_expansion(model, x, digits)
        info["residual"] = str(expansion_residual(model, x, digits))
    except SymdynError as e:
        return [types.TextContent(
            type="text",
            text=f"Error expanding {arguments['x']}: {str(e)}"
        )]

    return [types.TextContent(
        type="text",
        text=f"Greedy expansion of {x} in base {info['beta_numeric']}\n\n{format_info_text(info)}"
    )]


# Tool definition for MCP server
BETA_EXPAND_TOOL = types.Tool(
    name="beta_expand",
    title="Beta Expansion",
    description="Greedy digits of x in [0, 1) for a real base beta > 1, with the reconstruction residual",
    inputSchema={
        "type": "object",
        "required": ["beta", "x"],
        "properties": {
            "beta": {
                "type": "string",
                "description": "Base: a decimal, a rational or an algebraic expression such as '(1 + sqrt(5)) / 2'"
            },
            "x": {
                "type": "string",
                "description": "Rational in [0, 1), or a polynomial in 'beta' with rational coefficients"
            },
            "depth": {
                "type": "integer",
                "description": "Number of digits (default: 40)"
            },
        },
    },
)
