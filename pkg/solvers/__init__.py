"""Solver stages, one per physical question."""
