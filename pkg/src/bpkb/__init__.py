"""Verification and retrieval over semantically annotated process schemas."""

__version__ = "0.1.0"
