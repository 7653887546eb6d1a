"""Numerical kernels: Franck-Condon factors, dressed rates, Liouvillians, Wigner grids, output writers."""
