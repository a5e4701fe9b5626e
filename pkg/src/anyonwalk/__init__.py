"""Discrete-time quantum walks of Abelian and Ising anyons over random
island backgrounds: simulation engines, link-invariant oracles, a
multiple-scattering localization model and fitting utilities."""

__version__ = "0.1.0"
