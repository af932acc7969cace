"""Small-amplitude periodic hydroelastic travelling waves."""

__version__ = "0.1.0"
