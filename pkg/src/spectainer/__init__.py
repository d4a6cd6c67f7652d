"""Containment certificates for projections of polyhedra and spectrahedra."""

__version__ = "0.1.0"
