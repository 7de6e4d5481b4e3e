"""Random network coding throughput model and resource control."""

__version__ = "0.1.0"
