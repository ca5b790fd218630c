"""
Error types for Event Kiwi.

Every error carries a stable UPPER_SNAKE `code` and a `details` dict so the
tools can turn it into the JSON error envelope without losing context.
"""

from typing import Any, Dict, Optional


class EventKiwiError(Exception):
    """Base class for all pipeline errors."""

    code = "EVENT_KIWI_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


class UnknownLabelCode(EventKiwiError):
    code = "UNKNOWN_LABEL_CODE"

    def __init__(self, label_code: Any):
        super().__init__(f"Unknown 3W class code: {label_code!r}", {"label_code": label_code})
        self.label_code = label_code


class InvalidEpisode(EventKiwiError):
    code = "INVALID_EPISODE"

    def __init__(self, episode_id: str, violations: list):
        super().__init__(
            f"Episode '{episode_id}' has {len(violations)} violation(s): "
            + ", ".join(str(v) for v in violations[:5]),
            {"episode_id": episode_id, "violations": [str(v) for v in violations]},
        )
        self.violations = violations


class MalformedHeader(EventKiwiError):
    code = "MALFORMED_HEADER"


class EmptyFile(EventKiwiError):
    code = "EMPTY_FILE"


class NoUsableChannels(EventKiwiError):
    code = "NO_USABLE_CHANNELS"


class MissingRoot(EventKiwiError):
    code = "MISSING_ROOT"


class EpisodeTooShort(EventKiwiError):
    code = "EPISODE_TOO_SHORT"


class TooFewSamples(EventKiwiError):
    code = "TOO_FEW_SAMPLES"


class LengthMismatch(EventKiwiError, ValueError):
    code = "LENGTH_MISMATCH"


class ShapeMismatch(EventKiwiError, ValueError):
    code = "SHAPE_MISMATCH"


class EmptyNode(EventKiwiError):
    code = "EMPTY_NODE"


class CorruptModelFile(EventKiwiError):
    code = "CORRUPT_MODEL_FILE"

    def __init__(self, field: str, message: Optional[str] = None):
        super().__init__(
            message or f"Corrupt model file: bad or missing field '{field}'", {"field": field}
        )
        self.field = field


class EmptySplit(EventKiwiError):
    code = "EMPTY_SPLIT"


class EmptyInput(EventKiwiError):
    code = "EMPTY_INPUT"


class InsufficientData(EventKiwiError):
    code = "INSUFFICIENT_DATA"

    def __init__(self, message: str, counts: Optional[Dict[str, int]] = None):
        super().__init__(message, {"counts": counts or {}})
        self.counts = counts or {}


class EmptyGrid(EventKiwiError):
    code = "EMPTY_GRID"


class IoFailure(EventKiwiError):
    code = "IO_FAILURE"


class ConfigError(EventKiwiError):
    code = "CONFIG_ERROR"


class UsageError(EventKiwiError):
    code = "USAGE_ERROR"

    def __init__(self, message: str, usage: str = ""):
        super().__init__(message, {"usage": usage})
        self.usage = usage
