"""Hermitian-Einstein heat flow laboratory on flat quotient domains."""

__version__ = "0.1.0"
