"""Real versus complex quantum theory in the entanglement-swapping network."""

__version__ = "0.1.0"
