"""Shared checks used by several tools."""
from .preflight import check_paths, estimate_time, run_preflight, validate_inputs

__all__ = ["check_paths", "estimate_time", "run_preflight", "validate_inputs"]
