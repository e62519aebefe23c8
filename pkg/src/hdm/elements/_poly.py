"""Scaled monomial bases shared by the polynomial elements."""
from __future__ import annotations

import numpy as np

P2 = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
ADINI = P2 + [(3, 0), (2, 1), (1, 2), (0, 3), (3, 1), (1, 3)]


def _falling(a, d):
    out = np.ones_like(a, dtype=float)
    for i in range(d):
        out = out * (a - i)
    return out


def monomials(exps, xi, eta, dx=0, dy=0):
    """Derivative ``d^dx/dxi^dx d^dy/deta^dy`` of every monomial, shape ``xi.shape + (nm,)``."""
    e = np.asarray(exps)
    a, b = e[:, 0], e[:, 1]
    ca, cb = _falling(a, dx), _falling(b, dy)
    pa, pb = np.maximum(a - dx, 0), np.maximum(b - dy, 0)
    xi = np.asarray(xi, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    return ca * cb * xi ** pa * eta ** pb


def local_frame(coords):
    """Centre and length scale used to build well-conditioned local monomials."""
    centre = coords.mean(axis=1)
    scale = np.linalg.norm(coords - centre[:, None, :], axis=2).max(axis=1)
    return centre, scale


def evaluate_basis(exps, coef, centre, scale, xy):
    """Values, gradients and Hessians of polynomial bases at physical points.

    ``coef`` has shape ``(nc, nm, nl)`` (monomial coefficients of each local
    basis function), ``xy`` has shape ``(nc, nq, 2)``.
    """
    s = scale[:, None, None]
    xi = (xy[..., 0] - centre[:, None, 0]) / scale[:, None]
    eta = (xy[..., 1] - centre[:, None, 1]) / scale[:, None]

    def block(dx, dy):
        return np.einsum("cqm,cml->cql", monomials(exps, xi, eta, dx, dy), coef)

    val = block(0, 0)
    grad = np.stack([block(1, 0), block(0, 1)], axis=-1) / s[..., None]
    hxx, hxy, hyy = block(2, 0), block(1, 1), block(0, 2)
    hess = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2) / (s * s)[..., None, None]
    return val, grad, hess
