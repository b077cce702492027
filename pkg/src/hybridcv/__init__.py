"""Hybrid qubit-oscillator state-vector simulation."""

__version__ = "0.1.0"
