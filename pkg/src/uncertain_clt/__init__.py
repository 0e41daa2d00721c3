"""Central limit theorem under uncertain linear transformations."""

__version__ = "0.1.0"
