"""Spectral laboratory for NLS with time-dependent harmonic potentials."""
