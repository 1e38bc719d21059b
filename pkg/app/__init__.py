"""Steklov zeta toolkit: weighted Dirichlet-to-Neumann spectra on the circle and their zeta differences."""

__version__ = "1.0.0"
