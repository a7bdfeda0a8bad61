"""Term-based parallel composition of security protocols over k-strand spaces."""

__version__ = "0.1.0"
