"""Test suite for the thin-film profile toolkit."""
