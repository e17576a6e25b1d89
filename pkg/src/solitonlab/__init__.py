"""Soliton Newton lab: solitary-wave dynamics in slowly varying potentials."""
