"""Vanna-Volga pricing of first-generation FX exotics."""

__version__ = "0.1.0"
