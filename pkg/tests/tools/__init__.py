"""Tests for Event Kiwi command tools."""
