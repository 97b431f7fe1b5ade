"""Galerkin P1 solvers for 1D nonlinear diffusion problems with corner-singularity correction."""
