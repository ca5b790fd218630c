"""Tests for Event Kiwi utilities."""
