"""Entropic constraints from e-separation in hidden-variable DAGs."""

__version__ = "0.1.0"
