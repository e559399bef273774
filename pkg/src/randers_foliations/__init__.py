"""Extrinsic geometry of codimension-one foliated Randers spaces.

Pointwise Randers algebra, discrete foliated manifolds on periodic grids,
shape-operator comparison formulas, and an integral-formula verifier driven
by quadrature on the built-in example catalog.
"""

from .matinv import newton_transform, sigma_multi, sigma_single, sigma_via_determinant
from .point import NormalData, RandersPoint, f_normal, fundamental_tensor, randers_norm

__all__ = [
    "sigma_single",
    "sigma_multi",
    "sigma_via_determinant",
    "newton_transform",
    "RandersPoint",
    "NormalData",
    "randers_norm",
    "fundamental_tensor",
    "f_normal",
]
