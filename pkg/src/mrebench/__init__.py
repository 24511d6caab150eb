"""Closed-loop benchmark of direct-inversion elastography on simulated shear waves."""

__version__ = "0.1.0"
