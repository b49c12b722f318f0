"""Bundled example structures in the ``.qlab`` format."""
