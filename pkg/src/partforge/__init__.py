"""partforge: requirements- and resource-driven part-making compiler."""

__version__ = "0.1.0"
