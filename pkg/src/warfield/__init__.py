"""Exact Ulm/Warfield invariants and back-and-forth witnesses for p-local modules."""

__version__ = "0.1.0"
