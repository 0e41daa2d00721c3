"""Seed handling and the worker pool used by Monte Carlo and experiment sweeps."""
