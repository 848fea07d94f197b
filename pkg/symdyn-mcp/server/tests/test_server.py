#!/usr/bin/env python3
"""Tests for the symdyn MCP tools."""

import sys

import pytest

from server import mcp, server
from tools.analyze_pair import analyze_pair_tool, visit_densities_tool
from tools.beta_expand import beta_expand_tool
from tools.check_model import check_model_tool, decompose_model_tool
from tools.construct import construct_dc1_tool, construct_level_set_tool, construct_polynomial_tool

GOLDEN_BETA = "(1 + sqrt(5)) / 2"


def only_text(result):
    assert len(result) == 1
    assert result[0].type == "text"
    return result[0].text


class TestServer:
    """FastMCP registration."""

    def test_server_name(self):
        assert server.name == "Symdyn MCP Server"

    @pytest.mark.asyncio
    async def test_tools_are_registered(self):
        names = {tool.name for tool in await mcp.list_tools()}
        assert names == {
            "check_model",
            "decompose_model",
            "beta_expand",
            "construct_dc1",
            "construct_level_set",
            "construct_polynomial",
            "analyze_pair",
            "visit_densities",
        }


class TestModelTools:
    """check_model and decompose_model."""

    @pytest.mark.asyncio
    async def test_check_golden_mean(self):
        text = only_text(await check_model_tool({"model": "golden-mean"}))
        assert "Model checked: sft on 2 symbols" in text
        assert "• Primitivity index: 2" in text
        assert "• Period: 1" in text

    @pytest.mark.asyncio
    async def test_check_json_spec(self):
        text = only_text(await check_model_tool({"model": '{"kind": "sft", "matrix": [[0, 1], [1, 0]]}'}))
        assert "• Mixing: False" in text
        assert "• Period: 2" in text

    @pytest.mark.asyncio
    async def test_check_missing_argument(self):
        text = only_text(await check_model_tool({}))
        assert "Missing required argument 'model'" in text

    @pytest.mark.asyncio
    async def test_check_unknown_preset(self):
        text = only_text(await check_model_tool({"model": "full7"}))
        assert text.startswith("Error loading model: unknown model preset 'full7'")

    @pytest.mark.asyncio
    async def test_check_bad_json(self):
        text = only_text(await check_model_tool({"model": "{kind: sft"}))
        assert "Model spec is not valid JSON" in text

    @pytest.mark.asyncio
    async def test_check_dead_matrix(self):
        text = only_text(await check_model_tool({"model": {"kind": "sft", "matrix": [[0, 1], [0, 0]]}}))
        assert "Error building sft model" in text

    @pytest.mark.asyncio
    async def test_decompose_two_cycle(self):
        text = only_text(await decompose_model_tool({"model": "two-cycle"}))
        assert "Period: 2" in text
        assert "Cyclic classes: {0}, {1}" in text
        assert "A^p primitive on every class: True" in text

    @pytest.mark.asyncio
    async def test_decompose_beta_model(self):
        text = only_text(await decompose_model_tool({"model": "golden-beta"}))
        assert "Error: periodic decomposition needs a transition system" in text


class TestBetaTool:
    """beta_expand."""

    @pytest.mark.asyncio
    async def test_golden_expansion(self):
        text = only_text(await beta_expand_tool({"beta": GOLDEN_BETA, "x": "beta - 1", "depth": 4}))
        assert "Greedy expansion of beta - 1" in text
        assert "• Digits: 1000" in text
        assert "• Residual:" in text

    @pytest.mark.asyncio
    async def test_bad_depth(self):
        text = only_text(await beta_expand_tool({"beta": GOLDEN_BETA, "x": "1/2", "depth": 0}))
        assert "Error: 'depth' must be positive" in text
        text = only_text(await beta_expand_tool({"beta": GOLDEN_BETA, "x": "1/2", "depth": "many"}))
        assert "Error: 'depth' must be an integer" in text

    @pytest.mark.asyncio
    async def test_missing_x(self):
        text = only_text(await beta_expand_tool({"beta": GOLDEN_BETA}))
        assert "Missing required argument 'x'" in text


class TestPairTools:
    """analyze_pair and visit_densities."""

    @pytest.mark.asyncio
    async def test_eventually_equal_pair(self):
        text = only_text(await analyze_pair_tool({"x": "1101", "y": "0110111", "horizon": 10000}))
        assert "Pair statistics up to n=10000" in text
        # the streams agree at index 2 and from index 8 on
        assert "phi_prefix(t=1/2, n=10000) = 4997/5000" in text
        assert "Verdict at horizon: refuted-at-horizon" in text

    @pytest.mark.asyncio
    async def test_word_outside_alphabet(self):
        text = only_text(await analyze_pair_tool({"x": "012", "y": "0"}))
        assert text == "Error: 'x': Symbol 2 is outside the alphabet of size 2"

    @pytest.mark.asyncio
    async def test_bad_level(self):
        text = only_text(await analyze_pair_tool({"x": "1", "y": "0", "t0": "abc"}))
        assert text == "Error: t0 must be a rational number, got 'abc'"
        text = only_text(await analyze_pair_tool({"x": "1", "y": "0", "t0": "0"}))
        assert text == "Error: t0 must be positive, got 0"

    @pytest.mark.asyncio
    async def test_missing_stream(self):
        text = only_text(await analyze_pair_tool({"x": "1"}))
        assert "Missing required argument 'y'" in text

    @pytest.mark.asyncio
    async def test_densities(self):
        text = only_text(await visit_densities_tool({"visits": [2, 4, 6, 8], "horizon": 8, "window_floor": 2}))
        assert "• upper: 1/2" in text
        assert "• banach lower: 1/3" in text
        assert "• banach upper: 2/3" in text
        assert "<= B^*: True" in text

    @pytest.mark.asyncio
    async def test_densities_outside_horizon(self):
        text = only_text(await visit_densities_tool({"visits": [9], "horizon": 8}))
        assert text == "Error computing densities: visit times must lie in [1, 8]"

    @pytest.mark.asyncio
    async def test_densities_missing_horizon(self):
        text = only_text(await visit_densities_tool({"visits": [1]}))
        assert "Missing required argument 'horizon'" in text


class TestConstructionTools:
    """construct_dc1, construct_level_set and construct_polynomial."""

    @pytest.mark.asyncio
    async def test_dc1_single_stage(self):
        text = only_text(await construct_dc1_tool({"stages": 1}))
        assert "Constructed DC1 family with 1 stages" in text
        assert "• Members: 1, 2" in text
        assert "Pair 1|2: DC1-witnessed" in text

    @pytest.mark.asyncio
    async def test_dc1_stage_cap(self):
        text = only_text(await construct_dc1_tool({"stages": 5}))
        assert text == "Error: 'stages' must lie in 1..4"

    @pytest.mark.asyncio
    async def test_dc1_seed_word(self):
        text = only_text(await construct_dc1_tool({"seed_word": "2"}))
        assert text == "Error: 'seed_word': Symbol 2 is outside the alphabet of size 2"
        text = only_text(await construct_dc1_tool({"seed_word": "0", "stages": 1}))
        assert text.startswith("Error constructing family:")

    @pytest.mark.asyncio
    async def test_level_set(self):
        text = only_text(await construct_level_set_tool({"a": "11/20", "b": "3/5", "stages": 1}))
        assert "Constructed level-set family for [11/20, 3/5]" in text
        assert "• Members: 1, 2" in text

    @pytest.mark.asyncio
    async def test_level_set_bad_levels(self):
        text = only_text(await construct_level_set_tool({"a": "x", "b": "1/2"}))
        assert text == "Error: a must be a rational number, got 'x'"
        text = only_text(await construct_level_set_tool({"a": "0", "b": "1", "stages": 1}))
        assert text.startswith("Error constructing level-set family:")

    @pytest.mark.asyncio
    async def test_level_set_missing_level(self):
        text = only_text(await construct_level_set_tool({"a": "1/2"}))
        assert "Missing required argument 'b'" in text

    @pytest.mark.asyncio
    async def test_polynomial(self):
        text = only_text(await construct_polynomial_tool({"stages": 2}))
        assert "Constructed polynomial-metric family for alpha 'sqrt'" in text
        assert "Pair 11|22: alpha-DC1-witnessed" in text
        assert "• Stage 2:" in text

    @pytest.mark.asyncio
    async def test_polynomial_slow_alpha(self):
        text = only_text(await construct_polynomial_tool({"alpha": "log", "stages": 1}))
        assert text.startswith("Error constructing polynomial family:")
        text = only_text(await construct_polynomial_tool({"alpha": "nope", "stages": 1}))
        assert "known: cbrt, log, log2, sqrt" in text


if __name__ == "__main__":
    # This allows the file to be run as a standalone script
    print(f"Running tests from {__file__}")
    sys.exit(pytest.main([__file__]))
