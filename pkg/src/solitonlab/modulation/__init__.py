"""Skew-orthogonal decomposition and modulation residuals."""
