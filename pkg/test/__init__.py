"""Tests for the twin GDLAttention toolkit."""
