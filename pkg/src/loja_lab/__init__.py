"""Numerical laboratory for gradient inequalities on constraint manifolds.

Discrete energies and integral constraints on 1-D grids, projected gradient
flows with retraction, implicit-function charts, and empirical estimates of
Lojasiewicz exponents and constants.
"""
__version__ = "0.1.0"
