"""Interpretable weather/traffic event analysis with two-slice Bayesian networks."""

__version__ = "0.1.0"
