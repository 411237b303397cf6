"""Causal-model polytopes for two-party Bell scenarios with communication."""

__version__ = "0.1.0"
