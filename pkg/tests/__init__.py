"""Event Kiwi tests."""
