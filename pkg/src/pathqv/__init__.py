"""Pathwise quadratic variation along stopping-time partitions."""

__version__ = "0.1.0"
