"""Estimators and simulation tools for hypothetical estimands with intercurrent events."""

__version__ = "0.1.0"
