"""Tests for the SM-MC simulator."""
