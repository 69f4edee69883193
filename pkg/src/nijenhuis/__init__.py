"""Nijenhuis operators on local charts: torsion, tangent lifts, projectability, Lie algebras."""

__version__ = "0.1.0"
