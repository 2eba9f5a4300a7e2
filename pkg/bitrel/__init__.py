"""Relationship estimation between long weighted binary event streams."""

__version__ = "1.0.0"
