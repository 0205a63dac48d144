"""Continuous isotropic spin measurement: Kraus trajectories, Cartan SDEs and radial Fokker-Planck."""

__version__ = "0.1.0"
