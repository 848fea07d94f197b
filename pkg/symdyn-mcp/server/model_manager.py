"""Shift model specs and the model cache shared by the CLI and the MCP tools."""

import json
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from mcp.server.fastmcp.utilities.logging import get_logger
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator

from beta import BetaModel
from errors import ConfigError, SymdynError
from subshifts import ShiftModel, SoficModel, TransitionSystem

logger = get_logger(__name__)

# names accepted in place of a spec object
PRESETS: Dict[str, Dict[str, Any]] = {
    "full2": {"kind": "full", "n": 2},
    "full3": {"kind": "full", "n": 3},
    "golden-mean": {"kind": "sft", "matrix": [[1, 1], [1, 0]]},
    "two-cycle": {"kind": "sft", "matrix": [[0, 1], [1, 0]]},
    "golden-beta": {"kind": "beta", "beta": "(1 + sqrt(5)) / 2"},
}


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FullShiftSpec(_Spec):
    kind: Literal["full"] = "full"
    n: int = Field(2, ge=1)


class TransitionSpec(_Spec):
    kind: Literal["sft"] = "sft"
    matrix: List[List[int]]

    @field_validator("matrix")
    @classmethod
    def _square_01(cls, value: List[List[int]]) -> List[List[int]]:
        size = len(value)
        if size == 0 or any(len(row) != size for row in value):
            raise ValueError("transition matrix must be square and nonempty")
        if any(entry not in (0, 1) for row in value for entry in row):
            raise ValueError("transition matrix entries must be 0 or 1")
        return value


class SoficSpec(_Spec):
    kind: Literal["sofic"] = "sofic"
    edges: List[Tuple[Union[int, str], Union[int, str], int]]
    n: Optional[int] = Field(None, ge=1)


class BetaSpec(_Spec):
    kind: Literal["beta"] = "beta"
    beta: str
    precision_bits: Optional[int] = Field(None, ge=16)


ModelSpec = Annotated[
    Union[FullShiftSpec, TransitionSpec, SoficSpec, BetaSpec], Field(discriminator="kind")
]

_SPEC_ADAPTER = TypeAdapter(ModelSpec)


def parse_model_spec(raw: Any) -> ModelSpec:
    """
    Parse a model spec object or preset name.

    Raises:
        ConfigError: unknown preset or invalid spec
    """
    if isinstance(raw, (FullShiftSpec, TransitionSpec, SoficSpec, BetaSpec)):
        return raw
    if isinstance(raw, str):
        if raw not in PRESETS:
            raise ConfigError(f"unknown model preset '{raw}' (known: {', '.join(sorted(PRESETS))})")
        raw = PRESETS[raw]
    try:
        return _SPEC_ADAPTER.validate_python(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid model spec: {exc.errors()[0]['msg']}") from exc


def build_model(spec: ModelSpec, precision_bits: Optional[int] = None) -> ShiftModel:
    """Instantiate the shift model a parsed spec describes."""
    if isinstance(spec, FullShiftSpec):
        return TransitionSystem.full(spec.n)
    if isinstance(spec, TransitionSpec):
        return TransitionSystem(spec.matrix)
    if isinstance(spec, SoficSpec):
        return SoficModel(spec.edges, spec.n)
    return BetaModel(spec.beta, precision_bits or spec.precision_bits)


def _cache_key(spec: ModelSpec, precision_bits: Optional[int]) -> str:
    return json.dumps([spec.model_dump(), precision_bits], sort_keys=True)


class ModelManager:
    """Parses model specs and caches the built models."""

    def __init__(self):
        """Initialize the model manager with an empty cache."""
        self._model_cache: Dict[str, ShiftModel] = {}

    def load_model(
        self, raw_spec: Any, precision_bits: Optional[int] = None
    ) -> Tuple[Optional[ShiftModel], Optional[str]]:
        """
        Build a model from its spec, using the cache if available.

        Args:
            raw_spec: Spec object, parsed spec or preset name
            precision_bits: Interval precision for beta models

        Returns:
            Tuple of (model, error_message). Model is None if building failed.
        """
        try:
            spec = parse_model_spec(raw_spec)
        except ConfigError as e:
            return None, str(e)

        key = _cache_key(spec, precision_bits)
        if key in self._model_cache:
            return self._model_cache[key], None

        try:
            model = build_model(spec, precision_bits)
        except SymdynError as e:
            return None, f"Error building {spec.kind} model: {e}"

        self._model_cache[key] = model
        logger.info("model built: %s on %d symbols", spec.kind, model.n)
        return model, None

    def require_model(self, raw_spec: Any, precision_bits: Optional[int] = None) -> ShiftModel:
        """load_model for callers that propagate errors as exceptions."""
        spec = parse_model_spec(raw_spec)
        key = _cache_key(spec, precision_bits)
        if key not in self._model_cache:
            self._model_cache[key] = build_model(spec, precision_bits)
        return self._model_cache[key]

    def get_cached_model(self, raw_spec: Any, precision_bits: Optional[int] = None) -> Optional[ShiftModel]:
        """
        Get a cached model without building.

        Returns:
            Cached model or None if not found
        """
        try:
            spec = parse_model_spec(raw_spec)
        except ConfigError:
            return None
        return self._model_cache.get(_cache_key(spec, precision_bits))

    def clear_cache(self) -> None:
        """Clear all cached models."""
        self._model_cache.clear()

    def get_cache_info(self) -> Dict[str, Dict[str, Any]]:
        """
        Get information about cached models.

        Returns:
            Dictionary keyed by cache key with each model's description
        """
        return {key: model.describe() for key, model in self._model_cache.items()}


# Global model manager instance
_model_manager = ModelManager()


def get_model_manager() -> ModelManager:
    """Get the global model manager instance."""
    return _model_manager
