"""Validation utilities for run configs and tool arguments."""

import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence, Tuple


def validate_config_path(file_path: str) -> Tuple[bool, str]:
    """
    Validate that a run config exists, is readable and parses as a JSON object.

    Args:
        file_path: Path to the config file

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not file_path:
        return False, "Config path cannot be empty"

    path = Path(file_path)

    if not path.exists():
        return False, f"File does not exist: {file_path}"

    if not path.is_file():
        return False, f"Path is not a file: {file_path}"

    if not os.access(path, os.R_OK):
        return False, f"File is not readable: {file_path}"

    if path.suffix.lower() != ".json":
        return False, f"Config file must have a .json extension: {file_path}"

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        return False, f"Config is not valid JSON: {e}"

    if not isinstance(data, dict):
        return False, "Config must be a JSON object"

    return True, ""


def validate_output_dir(dir_path: str) -> Tuple[bool, str]:
    """
    Validate that an output directory exists or can be created, and is writable.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not dir_path:
        return False, "Output directory cannot be empty"

    path = Path(dir_path)
    if path.exists() and not path.is_dir():
        return False, f"Output path is not a directory: {dir_path}"

    # nearest existing ancestor decides writability
    ancestor = path
    while not ancestor.exists():
        ancestor = ancestor.parent
    if not os.access(ancestor, os.W_OK):
        return False, f"Output directory is not writable: {dir_path}"

    return True, ""


def validate_word_text(text: str, n: int) -> Tuple[bool, str]:
    """
    Validate a serialized word over the alphabet {0, ..., n-1}.

    Digit strings are accepted for n <= 10, comma-separated integers otherwise.
    """
    if text is None:
        return False, "Word cannot be missing"

    text = text.strip()
    if not text:
        return True, ""

    parts = list(text) if n <= 10 and "," not in text else text.split(",")
    for part in parts:
        if not part.strip().isdigit():
            return False, f"Word contains a non-digit entry '{part}': {text}"
        if int(part) >= n:
            return False, f"Symbol {part} is outside the alphabet of size {n}"

    return True, ""


def validate_prefixes(prefixes: Sequence[str], stages: int) -> Tuple[bool, str]:
    """Every prefix is a word over {1, 2} of length `stages`."""
    if not prefixes:
        return False, "At least one member prefix is required"

    for prefix in prefixes:
        if len(prefix) != stages:
            return False, f"Prefix '{prefix}' must have length {stages}"
        if any(ch not in "12" for ch in prefix):
            return False, f"Prefix '{prefix}' must be written over the symbols 1 and 2"

    return True, ""


def validate_fraction(value: Any, name: str, positive: bool = False) -> Tuple[bool, str]:
    """Check that value parses as an exact rational ('3/8', '0.125', 2)."""
    try:
        parsed = Fraction(str(value))
    except (TypeError, ValueError, ZeroDivisionError):
        return False, f"{name} must be a rational number, got {value!r}"

    if positive and parsed <= 0:
        return False, f"{name} must be positive, got {value}"

    return True, ""
