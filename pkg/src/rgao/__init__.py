"""Retrieval-guided topology routing with statically verified budget conservation."""

__version__ = "0.1.0"
