"""Tests for the Bergman kernel laboratory."""
