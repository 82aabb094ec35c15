"""Vertex-operator engine for operator product expansions of a scalar field.

Free-field vertex operators in D Euclidean dimensions, their polynomial
perturbations through three cross-checking evaluation paths, the supporting
D-dimensional special-function identities, and Hochschild-type consistency
checks.
"""

from .precision import set_precision, get_precision, precision

__all__ = ["set_precision", "get_precision", "precision"]
__version__ = "0.1.0"
