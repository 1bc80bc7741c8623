"""Sums of pentagonal numbers: representability tables, escalation and certificates."""

__version__ = "0.1.0"
