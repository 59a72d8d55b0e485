"""Rank community activity signals by how well they indicate flood impacts, day by day."""

__version__ = "0.1.0"
