"""Dissipative dynamics of few-level emitters near a slab out of thermal equilibrium."""

__version__ = "0.1.0"
