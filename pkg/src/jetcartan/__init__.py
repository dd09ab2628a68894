"""Tensor calculus on the 1-jet space J^1(R, M): nonlinear connections,
h-normal Gamma-linear connections, their torsion and curvature d-tensors,
and numerical verification of the Ricci, deflection and Bianchi identities."""

__version__ = "0.1.0"
