"""
Pre-flight validation utilities.

Run checks before expensive experiments to fail fast:
- Data path validation
- Input validation
- Split fraction validation
- Time estimation
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Sequence

logger = logging.getLogger(__name__)

SPLIT_TOL = 1e-9


def check_paths(required_paths: Dict[str, Optional[str]]) -> Dict:
    """
    Verify that required directories exist.

    Args:
        required_paths: Mapping of label -> path (None counts as missing)

    Returns:
        {"status": "pass"} or {"status": "fail", "missing": [...]}

    Example:
        result = check_paths({"data_root": "/data/3w"})
    """
    missing = [
        f"{label}={path}"
        for label, path in required_paths.items()
        if not path or not Path(path).is_dir()
    ]
    if missing:
        logger.warning(f"Missing paths: {missing}")
        return {"status": "fail", "missing": missing}
    logger.debug(f"All paths present: {list(required_paths)}")
    return {"status": "pass"}


def validate_inputs(inputs: Dict, rules: List[Dict]) -> Dict:
    """
    Validate inputs against rules.

    Rules format:
        {"field": "event", "required": True}
        {"field": "seed", "type": "integer", "min": 0}
        {"field": "method", "enum": ["rf", "tcn"]}
        {"field": "set", "pattern": r"^[\\w.]+=.+$"}

    Returns:
        {"status": "pass"} or {"status": "fail", "errors": [...]}
    """
    errors = []
    type_map = {"string": str, "integer": int, "float": (int, float), "boolean": bool}

    for rule in rules:
        field = rule.get("field")
        value = inputs.get(field)

        if rule.get("required") and value is None:
            errors.append(f"'{field}' is required but missing")
            continue
        if value is None:
            continue

        expected_type = rule.get("type")
        if expected_type in type_map and not isinstance(value, type_map[expected_type]):
            errors.append(f"'{field}' must be {expected_type}, got {type(value).__name__}")
            continue

        if "min" in rule and isinstance(value, (int, float)) and value < rule["min"]:
            errors.append(f"'{field}' must be >= {rule['min']}, got {value}")
        if "max" in rule and isinstance(value, (int, float)) and value > rule["max"]:
            errors.append(f"'{field}' must be <= {rule['max']}, got {value}")
        if "pattern" in rule and isinstance(value, str) and not re.match(rule["pattern"], value):
            errors.append(f"'{field}' doesn't match required pattern: {rule['pattern']}")
        if "enum" in rule and value not in rule["enum"]:
            errors.append(f"'{field}' must be one of {rule['enum']}, got '{value}'")

    if errors:
        logger.warning(f"Input validation failed: {errors}")
        return {"status": "fail", "errors": errors}
    logger.debug("Input validation passed")
    return {"status": "pass"}


def check_split(name: str, fractions: Sequence[float]) -> Dict:
    """Fractions must be positive and sum to 1."""
    errors = []
    if any(f <= 0 for f in fractions):
        errors.append(f"{name} fractions must be positive, got {list(fractions)}")
    if abs(sum(fractions) - 1.0) > SPLIT_TOL:
        errors.append(f"{name} fractions must sum to 1, got {sum(fractions)}")
    return {"status": "fail", "errors": errors} if errors else {"status": "pass"}


def estimate_time(formula: str, inputs: Dict) -> Dict:
    """
    Calculate estimated time from formula.

    Args:
        formula: Time formula in seconds using input variable names
        inputs: Dictionary of input values

    Returns:
        {"estimated_seconds": int, "human_readable": str}

    Example:
        estimate_time("windows * n_trees * 0.0005", {"windows": 2000, "n_trees": 175})
        # {"estimated_seconds": 175, "human_readable": "2 minutes 55 seconds"}
    """
    try:
        seconds = int(eval(formula, {"__builtins__": {}}, inputs))
    except Exception as e:
        logger.error(f"Time estimation failed: {e}")
        return {"error": str(e)}

    if seconds < 60:
        human = f"{seconds} seconds"
    elif seconds < 3600:
        mins, secs = divmod(seconds, 60)
        human = f"{mins} minutes {secs} seconds" if secs else f"{mins} minutes"
    else:
        hours, mins = seconds // 3600, (seconds % 3600) // 60
        human = f"{hours} hours {mins} minutes" if mins else f"{hours} hours"
    return {"estimated_seconds": seconds, "human_readable": human}


def run_preflight(
    inputs: Dict,
    required_paths: Optional[Dict[str, Optional[str]]] = None,
    validation_rules: Optional[List[Dict]] = None,
    splits: Optional[Dict[str, Sequence[float]]] = None,
    time_formula: Optional[str] = None,
    time_warn_threshold: Optional[float] = None,
) -> Dict:
    """
    Run all preflight checks.

    Returns:
        {
            "pass": bool,
            "checks": {"paths": {...}, "inputs": {...}, "splits": {...}, "time": {...}},
            "warnings": [...],
            "blockers": [...]
        }

    Example:
        result = run_preflight(
            inputs={"event": 2, "windows": 1800, "n_trees": 175, "epochs": 30},
            required_paths={"data_root": "/data/3w"},
            splits={"rf_split": (0.8, 0.2)},
            time_formula="windows * (n_trees * 0.0005 + epochs * 0.003)",
            time_warn_threshold=600,
        )
        if not result["pass"]:
            print(f"Blockers: {result['blockers']}")
    """
    checks: Dict[str, Dict] = {}
    warnings: List[str] = []
    blockers: List[str] = []

    if required_paths:
        path_result = check_paths(required_paths)
        checks["paths"] = path_result
        if path_result["status"] == "fail":
            blockers.append(f"Missing paths: {path_result['missing']}")

    if validation_rules:
        input_result = validate_inputs(inputs, validation_rules)
        checks["inputs"] = input_result
        if input_result["status"] == "fail":
            blockers.extend(input_result["errors"])

    if splits:
        split_errors = []
        for name, fractions in splits.items():
            split_errors.extend(check_split(name, fractions).get("errors", []))
        if split_errors:
            checks["splits"] = {"status": "fail", "errors": split_errors}
        else:
            checks["splits"] = {"status": "pass"}
        blockers.extend(split_errors)

    if time_formula:
        time_result = estimate_time(time_formula, inputs)
        checks["time"] = time_result
        seconds = time_result.get("estimated_seconds")
        if seconds is not None and time_warn_threshold and seconds > time_warn_threshold:
            warnings.append(
                f"Estimated runtime {time_result['human_readable']} "
                f"exceeds {int(time_warn_threshold)} seconds"
            )

    all_pass = len(blockers) == 0
    result = {"pass": all_pass, "checks": checks, "warnings": warnings, "blockers": blockers}
    if all_pass:
        logger.info("Preflight checks passed")
    else:
        logger.warning(f"Preflight checks failed: {blockers}")
    return result
