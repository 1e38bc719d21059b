"""Numerical core: Fourier primitives, Galerkin operators, spectra, zeta differences, variations, flow."""
