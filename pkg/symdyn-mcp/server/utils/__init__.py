"""Validation, formatting and serialization helpers for the symdyn lab."""
