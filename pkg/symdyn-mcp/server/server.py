"""Symdyn MCP Server - symbolic dynamics lab tools served with FastMCP."""

from typing import List, Optional

from mcp.server.fastmcp import FastMCP

from tools.analyze_pair import analyze_pair_tool, visit_densities_tool
from tools.beta_expand import beta_expand_tool
from tools.check_model import check_model_tool, decompose_model_tool
from tools.construct import construct_dc1_tool, construct_level_set_tool, construct_polynomial_tool

# Create FastMCP server
mcp = FastMCP("Symdyn MCP Server")


def _extract_text_from_content(content_blocks) -> str:
    """Extract text from MCP content blocks."""
    if not content_blocks:
        return "No content returned"

    content = content_blocks[0]
    if hasattr(content, 'text'):
        return content.text
    else:
        return str(content)


@mcp.tool()
async def check_model(model: str) -> str:
    """
    Build a shift model and report its graph analysis.

    Args:
        model: Preset name (full2, full3, golden-mean, two-cycle, golden-beta) or a JSON model spec

    Returns:
        Transitivity, primitivity index, period, mixing and essential symbols
    """
    result = await check_model_tool({"model": model})
    return _extract_text_from_content(result)


@mcp.tool()
async def decompose_model(model: str) -> str:
    """
    Periodic decomposition of a transitive transition system.

    Args:
        model: Preset name or JSON spec of a full shift or SFT

    Returns:
        Period, cyclic classes and whether A^p is primitive on each class
    """
    result = await decompose_model_tool({"model": model})
    return _extract_text_from_content(result)


@mcp.tool()
async def beta_expand(beta: str, x: str, depth: int = 40) -> str:
    """
    Greedy beta-expansion of x in [0, 1).

    Args:
        beta: Base beta > 1 (decimal, rational or algebraic expression)
        x: Rational in [0, 1) or polynomial in 'beta'
        depth: Number of digits (default: 40)

    Returns:
        The digits, the numeric value they reconstruct and the residual
    """
    result = await beta_expand_tool({"beta": beta, "x": x, "depth": depth})
    return _extract_text_from_content(result)


@mcp.tool()
async def construct_dc1(
    model: str = "full2", seed_word: str = "01", stages: int = 2, alpha: Optional[str] = None
) -> str:
    """
    Build a DC1 (or alpha-DC1) scrambled family on a mixing model.

    Args:
        model: Mixing model preset or JSON spec (default: full2)
        seed_word: Cycle word of the distal seed measure (default: 01)
        stages: Number of construction stages, at most 4 (default: 2)
        alpha: Optional alpha name for the alpha-DC1 variant

    Returns:
        Family summary with the verdict of every pair at its checkpoints
    """
    arguments = {"model": model, "seed_word": seed_word, "stages": stages}
    if alpha:
        arguments["alpha"] = alpha
    result = await construct_dc1_tool(arguments)
    return _extract_text_from_content(result)


@mcp.tool()
async def construct_level_set(
    a: str, b: str, phi: str = "1", model: str = "full2", stages: int = 2
) -> str:
    """
    Build a scrambled family inside the Birkhoff level set [a, b] of a cylinder observable.

    Args:
        a: Lower level (rational)
        b: Upper level (rational)
        phi: Cylinder word of the observable (default: 1)
        model: Mixing model preset or JSON spec (default: full2)
        stages: Number of construction stages, at most 4 (default: 2)

    Returns:
        The periodic measures and weights hitting a and b, and the family summary
    """
    result = await construct_level_set_tool(
        {"a": a, "b": b, "phi": phi, "model": model, "stages": stages}
    )
    return _extract_text_from_content(result)


@mcp.tool()
async def construct_polynomial(alpha: str = "sqrt", stages: int = 3) -> str:
    """
    Build the alpha-scrambled family on the two-sided 2-shift under the polynomial metric.

    Args:
        alpha: Alpha name growing faster than ln n (default: sqrt)
        stages: Number of construction stages, at most 4 (default: 3)

    Returns:
        Stage sizes and the verdict of every pair
    """
    result = await construct_polynomial_tool({"alpha": alpha, "stages": stages})
    return _extract_text_from_content(result)


@mcp.tool()
async def analyze_pair(
    x: str,
    y: str,
    x_tail: str = "0",
    y_tail: str = "0",
    t0: str = "1/4",
    horizon: int = 10000,
    model: str = "full2",
) -> str:
    """
    Closeness fractions of two eventually periodic streams.

    Args:
        x: Prefix word of the first stream
        y: Prefix word of the second stream
        x_tail: Word repeated after x's prefix (default: 0)
        y_tail: Word repeated after y's prefix (default: 0)
        t0: Separation level (default: 1/4)
        horizon: Number of shifts counted (default: 10000)
        model: Model whose metric is used (default: full2)

    Returns:
        phi_prefix at each level of the grid and the verdict at the horizon
    """
    result = await analyze_pair_tool(
        {"x": x, "y": y, "x_tail": x_tail, "y_tail": y_tail, "t0": t0, "horizon": horizon, "model": model}
    )
    return _extract_text_from_content(result)


@mcp.tool()
async def visit_densities(visits: List[int], horizon: int, window_floor: Optional[int] = None) -> str:
    """
    Upper, lower and Banach densities of a set of visit times.

    Args:
        visits: Visit times in [1, horizon]
        horizon: Last time considered
        window_floor: Shortest Banach window (default: from settings)

    Returns:
        The four densities and whether their chain holds
    """
    arguments = {"visits": visits, "horizon": horizon}
    if window_floor is not None:
        arguments["window_floor"] = window_floor
    result = await visit_densities_tool(arguments)
    return _extract_text_from_content(result)


# Export the server instance
server = mcp
