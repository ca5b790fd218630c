"""Event Kiwi: real-time undesired-event detection for oil-well telemetry."""

__version__ = "0.1.0"
