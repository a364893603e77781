"""Fidelity-based measurement-induced nonlocality and nonbilocal correlations."""

__version__ = "0.1.0"
