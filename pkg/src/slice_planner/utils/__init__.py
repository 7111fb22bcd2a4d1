"""Utility functions for the slice planner."""
