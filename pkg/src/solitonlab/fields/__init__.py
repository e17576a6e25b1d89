"""Periodic grids, fields and spectral calculus."""
