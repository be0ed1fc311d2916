"""Embedding extraction: encoder inference plus subword-role alignment."""

__version__ = "0.1.0"
