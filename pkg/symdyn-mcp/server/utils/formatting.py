"""Formatting utilities turning lab objects into JSON-ready dictionaries."""

from fractions import Fraction
from numbers import Integral
from typing import Any, Dict, Sequence

import mpmath

from beta import BetaModel
from subshifts import PeriodicDecomposition, ShiftModel, TransitionSystem
from symbolic import format_word


def format_value(value: Any) -> Any:
    """
    Format a lab value for JSON serialization.

    Fractions and integers too large for a JSON reader's double become strings;
    containers are formatted element-wise.
    """
    if value is None or isinstance(value, (bool, str, float)):
        return value

    if isinstance(value, Integral):
        value = int(value)
        return value if abs(value) < 2**53 else str(value)

    if isinstance(value, Fraction):
        return str(value)

    if isinstance(value, dict):
        return {str(k): format_value(v) for k, v in value.items()}

    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [format_value(item) for item in items]

    if hasattr(value, "value"):
        return value.value

    return str(value)


def format_model_info(model: ShiftModel) -> Dict[str, Any]:
    """
    Format a shift model with its graph analysis.

    Args:
        model: Any shift model

    Returns:
        Dictionary with the model description plus transitivity, primitivity index
        and period for transition systems
    """
    info = dict(model.describe())
    info["mixing"] = model.is_mixing()

    if isinstance(model, TransitionSystem):
        transitive = model.is_transitive()
        info["transitive"] = transitive
        info["primitivity_index"] = model.primitivity_index()
        info["period"] = model.period() if transitive else None
        info["essential_symbols"] = model.essential_list
    elif hasattr(model, "primitivity_index"):
        info["primitivity_index"] = model.primitivity_index()

    return format_value(info)


def format_decomposition(ts: TransitionSystem, decomposition: PeriodicDecomposition) -> Dict[str, Any]:
    return {
        "period": decomposition.period,
        "classes": decomposition.as_lists(),
        "class_power_primitive": ts.class_power_primitive(decomposition),
    }


def format_expansion(model: BetaModel, x: Any, digits: Sequence[int]) -> Dict[str, Any]:
    """
    Format a greedy beta-expansion with its reconstruction error bound.

    The tail after `depth` digits contributes at most beta^-depth.
    """
    depth = len(digits)
    with mpmath.workdps(50):
        value = model.approximate(digits, dps=50)
        tail = mpmath.mpf(model.numeric(60)) ** (-depth)
        return {
            "beta": str(model.beta),
            "beta_numeric": model.numeric(),
            "x": str(x),
            "depth": depth,
            "digits": format_word(digits, model.n),
            "partial_sum": mpmath.nstr(value, 30),
            "tail_bound": mpmath.nstr(tail, 10),
        }


def format_info_text(info: Dict[str, Any], indent: str = "") -> str:
    """Render a flat or nested dictionary as readable bullet lines."""
    lines = []
    for key, value in info.items():
        label = key.replace("_", " ").capitalize()
        if isinstance(value, dict):
            lines.append(f"{indent}• {label}:")
            lines.append(format_info_text(value, indent + "  "))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{indent}• {label}: {len(value)} entries")
        else:
            lines.append(f"{indent}• {label}: {value}")
    return "\n".join(lines)
