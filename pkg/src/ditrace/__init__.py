"""Delay-insensitive circuit workbench: trace structures, DI rules, decomposition, simulation."""

__version__ = "0.1.0"
