"""Random-circuit designs, dispersiveness and circuit-checking experiments."""

__version__ = "0.1.0"
