"""Per-event experiment harness."""
