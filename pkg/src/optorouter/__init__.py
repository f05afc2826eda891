"""Steady states, response functions and routing spectra of a Coulomb-coupled optomechanical router."""

__version__ = "0.1.0"
