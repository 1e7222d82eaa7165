"""Tests for polyvar."""
