"""Tests for the dcmd package and command line."""
