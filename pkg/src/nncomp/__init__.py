"""Noun-compound compositionality prediction from layered contextual embeddings."""

__version__ = "0.1.0"
