"""Transition-based parsing of enhanced Universal Dependencies as DAGs."""

__version__ = "0.1.0"
