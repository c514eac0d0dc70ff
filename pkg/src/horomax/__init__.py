"""Horofunction compactifications of max-metric products of rank-one spaces."""

__version__ = "0.1.0"
