"""Simulating generalized measurements with few outcomes by postselection."""

__version__ = "0.1.0"
