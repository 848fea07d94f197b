#!/usr/bin/env python3
"""Tests for model specs and the model cache."""

import pytest

from beta import BetaModel
from errors import ConfigError
from model_manager import PRESETS, ModelManager, parse_model_spec
from subshifts import SoficModel, TransitionSystem


class TestParseModelSpec:
    """Spec objects and preset names."""

    def test_presets(self):
        assert sorted(PRESETS) == ["full2", "full3", "golden-beta", "golden-mean", "two-cycle"]
        spec = parse_model_spec("golden-mean")
        assert spec.kind == "sft"
        assert spec.matrix == [[1, 1], [1, 0]]

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown model preset 'full9'"):
            parse_model_spec("full9")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="invalid model spec"):
            parse_model_spec({"kind": "cellular"})

    def test_non_square_matrix(self):
        with pytest.raises(ConfigError, match="square"):
            parse_model_spec({"kind": "sft", "matrix": [[1, 1]]})

    def test_extra_fields_rejected(self):
        with pytest.raises(ConfigError):
            parse_model_spec({"kind": "full", "n": 2, "colour": "red"})


class TestModelManager:
    """Building and caching models."""

    def test_load_and_cache(self):
        manager = ModelManager()
        assert manager.get_cached_model("full2") is None
        model, error = manager.load_model("full2")
        assert error is None
        assert isinstance(model, TransitionSystem)
        again, _ = manager.load_model({"kind": "full", "n": 2})
        assert again is model
        assert manager.get_cached_model("full2") is model
        assert len(manager.get_cache_info()) == 1

    def test_each_kind(self):
        manager = ModelManager()
        sofic, _ = manager.load_model({"kind": "sofic", "edges": [["a", "a", 0], ["a", "b", 1], ["b", "a", 1]]})
        assert isinstance(sofic, SoficModel)
        beta, _ = manager.load_model("golden-beta")
        assert isinstance(beta, BetaModel)
        assert beta.n == 2

    def test_spec_error_is_returned(self):
        model, error = ModelManager().load_model("nope")
        assert model is None
        assert "unknown model preset 'nope'" in error

    def test_build_error_is_returned(self):
        model, error = ModelManager().load_model({"kind": "sft", "matrix": [[0, 1], [0, 0]]})
        assert model is None
        assert error.startswith("Error building sft model")
        assert "no infinite path" in error

    def test_require_model_raises(self):
        with pytest.raises(ConfigError):
            ModelManager().require_model("nope")

    def test_clear_cache(self):
        manager = ModelManager()
        manager.load_model("two-cycle")
        manager.clear_cache()
        assert manager.get_cache_info() == {}

    def test_invalid_cache_lookup(self):
        assert ModelManager().get_cached_model({"kind": "bogus"}) is None
