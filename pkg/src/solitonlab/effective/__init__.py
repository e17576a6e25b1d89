"""Effective point-particle dynamics."""
