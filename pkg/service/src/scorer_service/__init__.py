"""Reference remote grammaticality scorer service."""

__version__ = "0.1.0"
