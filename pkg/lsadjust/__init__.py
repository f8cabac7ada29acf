"""Latent-space adjusted estimation of social influence on longitudinal networks."""

__version__ = "0.1.0"
