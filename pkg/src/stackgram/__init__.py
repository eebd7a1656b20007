"""Layered stack words, multi-layer prefix grammars, whistles and a small positive supercompiler."""

__version__ = "0.1.0"
