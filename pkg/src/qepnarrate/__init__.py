"""Narrate relational query execution plans in natural language."""

__version__ = "0.1.0"
