"""Quantum functional expansion: variational simulation of expanded differential equations."""

__version__ = "0.1.0"
