"""Encoding-encryption pipeline with a coset (wire-tap) pre-encoder, and
exact / Monte-Carlo key and keystream equivocation."""

__version__ = "0.1.0"
