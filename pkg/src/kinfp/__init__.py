"""Kinetic Fokker-Planck simulation on bounded domains with kinetic boundary conditions."""

__version__ = "0.1.0"
