"""Nonlinearities, potentials and conserved functionals."""
