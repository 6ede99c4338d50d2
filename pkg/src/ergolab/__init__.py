"""Rotations on compact Abelian groups, non-conventional Birkhoff averages and
exact harmonic-analysis checks on finite quotients."""

__version__ = "0.1.0"
