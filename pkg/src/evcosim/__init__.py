"""Coupled microscopic EV traffic / distribution grid co-simulator."""

__version__ = "0.1.0"
