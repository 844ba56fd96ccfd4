"""Outer surfaces of the package."""
