"""Tests for Event Kiwi API modules."""
