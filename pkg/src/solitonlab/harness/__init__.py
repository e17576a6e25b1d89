"""Experiment configuration, orchestration and outputs."""
