"""Figure generation for array-partitioning sweep results."""

__version__ = "0.1.0"
