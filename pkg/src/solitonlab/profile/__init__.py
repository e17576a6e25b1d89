"""Solitary-wave profiles and the soliton family."""
