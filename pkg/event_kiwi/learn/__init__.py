"""Feature extraction, learners and metrics."""
