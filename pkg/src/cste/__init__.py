"""Composite and staged trust evaluation for multi-hop collaborator selection."""

__version__ = "0.1.0"
