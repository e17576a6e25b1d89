"""Linearized operators, spectra and certificates."""
