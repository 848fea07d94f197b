"""Model check and periodic decomposition tool implementations."""

import json
from typing import Any, Dict, List

import mcp.types as types

from errors import SymdynError
from model_manager import get_model_manager
from subshifts import TransitionSystem
from utils.formatting import format_decomposition, format_info_text, format_model_info


def parse_model_argument(raw: Any) -> Any:
    """Model arguments are preset names or JSON spec objects (possibly as text)."""
    if isinstance(raw, str) and raw.strip().startswith("{"):
        return json.loads(raw)
    return raw


def load_model_argument(raw: Any):
    """ModelManager.load_model for a raw tool argument; returns (model, error_message)."""
    model_manager = get_model_manager()
    try:
        spec = parse_model_argument(raw)
    except json.JSONDecodeError as e:
        return None, f"Model spec is not valid JSON: {e}"
    return model_manager.load_model(spec)


async def check_model_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Build a shift model and report its graph analysis.

    Args:
        arguments: Tool arguments containing 'model'

    Returns:
        List of content blocks with model information or error
    """
    if "model" not in arguments:
        return [types.TextContent(
            type="text",
            text="Error: Missing required argument 'model'"
        )]

    model, error_msg = load_model_argument(arguments["model"])
    if model is None:
        return [types.TextContent(
            type="text",
            text=f"Error loading model: {error_msg}"
        )]

    try:
        info = format_model_info(model)
    except SymdynError as e:
        return [types.TextContent(
            type="text",
            text=f"Error analyzing model: {str(e)}"
        )]

    return [types.TextContent(
        type="text",
        text=f"Model checked: {info['kind']} on {info['n']} symbols\n\n{format_info_text(info)}"
    )]


async def decompose_model_tool(arguments: Dict[str, Any]) -> List[types.ContentBlock]:
    """
    Split a transitive transition system into its cyclic classes.

    Args:
        arguments: Tool arguments containing 'model'

    Returns:
        List of content blocks with the classes or error
    """
    if "model" not in arguments:
        return [types.TextContent(
            type="text",
            text="Error: Missing required argument 'model'"
        )]

    model, error_msg = load_model_argument(arguments["model"])
    if model is None:
        return [types.TextContent(
            type="text",
            text=f"Error loading model: {error_msg}"
        )]

    if not isinstance(model, TransitionSystem):
        return [types.TextContent(
            type="text",
            text="Error: periodic decomposition needs a transition system (full or sft model)"
        )]

    try:
        info = format_decomposition(model, model.cyclic_classes())
    except SymdynError as e:
        return [types.TextContent(
            type="text",
            text=f"Error decomposing model: {str(e)}"
        )]

    classes = ", ".join("{" + ", ".join(map(str, c)) + "}" for c in info["classes"])
    return [types.TextContent(
        type="text",
        text=(
            f"Period: {info['period']}\n"
            f"Cyclic classes: {classes}\n"
            f"A^p primitive on every class: {info['class_power_primitive']}"
        )
    )]


_MODEL_PROPERTY = {
    "type": "string",
    "description": (
        "Model preset (full2, full3, golden-mean, two-cycle, golden-beta) or a JSON spec such as "
        '{"kind": "sft", "matrix": [[1, 1], [1, 0]]}'
    ),
}

# Tool definitions for MCP server
CHECK_MODEL_TOOL = types.Tool(
    name="check_model",
    title="Check Shift Model",
    description="Build a shift model and report transitivity, primitivity index, period and mixing",
    inputSchema={
        "type": "object",
        "required": ["model"],
        "properties": {"model": _MODEL_PROPERTY},
    },
)

DECOMPOSE_MODEL_TOOL = types.Tool(
    name="decompose_model",
    title="Periodic Decomposition",
    description="Cyclic classes of a transitive transition system and primitivity of A^p on each",
    inputSchema={
        "type": "object",
        "required": ["model"],
        "properties": {"model": _MODEL_PROPERTY},
    },
)
