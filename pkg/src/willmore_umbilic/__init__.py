"""Numerical toolkit for Willmore surfaces and their umbilic sets in conformal charts."""

__version__ = "0.1.0"
