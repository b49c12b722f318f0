"""Command-line front end: ``qlab``."""

from .main import main

__all__ = ["main"]
