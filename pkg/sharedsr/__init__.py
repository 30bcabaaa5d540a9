"""Symbolic regression with sharing-aware parameters for categorical data."""

__version__ = "0.1.0"
