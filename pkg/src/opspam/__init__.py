"""Deceptive review detection: labeling, syntactic features, MaxEnt, evaluation."""

__version__ = "0.1.0"
