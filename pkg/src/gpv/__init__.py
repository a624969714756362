"""Cutoff computation, model checking and run transfer for guarded protocols."""

__version__ = "0.1.0"
