"""Relevance-classifier sidecar for follow-up question exchange files."""

__version__ = "0.1.0"
