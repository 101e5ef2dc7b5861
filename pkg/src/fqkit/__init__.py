"""Follow-up question dataset synthesis, candidate ranking, and evaluation."""

__version__ = "0.1.0"
