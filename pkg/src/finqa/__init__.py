"""Hallucination-minimized question answering over tabular financial data."""

__version__ = "0.1.0"
