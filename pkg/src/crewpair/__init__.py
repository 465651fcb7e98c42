"""Desk-scale crew pairing optimization with column generation and a graph auto-encoder."""

__version__ = "0.1.0"
