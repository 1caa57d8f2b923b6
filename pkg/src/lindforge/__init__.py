"""Entanglement-constrained dissipation: engineered Lindbladians, spectra and bounds."""

__version__ = "0.1.0"
