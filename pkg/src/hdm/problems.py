"""Semilinear fourth-order problems ``A(H psi, H phi) + B(H psi, grad psi, grad phi) = L(phi)``.

A problem is described pointwise by two fluxes:

* ``a_flux(H)``: the matrix ``sigma`` with ``A(H, Gamma) = int sigma : Gamma``
  (linear in ``H``);
* ``b_flux(H, G)``: the vectors ``tau`` with ``B(H, G, Theta) = int tau . Theta``
  (bilinear in ``(H, G)``).

Arrays carry the components on axis ``-3`` for Hessians ``(..., k, 2, 2)``
and on axis ``-2`` for gradients ``(..., k, 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np


def cofactor(H):
    """Cofactor of 2x2 matrices: ``[[a, b], [c, d]] -> [[d, -c], [-b, a]]``."""
    H = np.asarray(H, dtype=float)
    out = np.empty_like(H)
    out[..., 0, 0] = H[..., 1, 1]
    out[..., 0, 1] = -H[..., 1, 0]
    out[..., 1, 0] = -H[..., 0, 1]
    out[..., 1, 1] = H[..., 0, 0]
    return out


def vk_bracket(H1, H2):
    """``[xi, chi] = xi_xx chi_yy + xi_yy chi_xx - 2 xi_xy chi_xy = cof(H1) : H2``."""
    return np.sum(cofactor(H1) * np.asarray(H2, dtype=float), axis=(-2, -1))


def _rot_flux(H, G):
    # tr(H) phi . rot(theta) = theta . tr(H) (phi_2, -phi_1)
    tr = np.trace(H, axis1=-2, axis2=-1)
    return tr[..., None] * np.stack([G[..., 1], -G[..., 0]], axis=-1)


def _vk_flux(H, G):
    C = cofactor(H[..., 0, :, :])
    x1, x2 = G[..., 0, :], G[..., 1, :]
    t1 = C[..., 0, :] * x2[..., 0:1] + C[..., 1, :] * x2[..., 1:2]       # cof^T xi2
    t2 = -(C[..., :, 0] * x1[..., 0:1] + C[..., :, 1] * x1[..., 1:2])    # -cof xi1
    return np.stack([t1, t2], axis=-2)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    k: int
    coercivity: float
    a_flux: Callable
    b_flux: Callable
    load: Callable               # (x, y) -> (..., k): L(Phi) = sum_c int load_c phi_c
    exact: Optional[object] = None
    params: dict = None

    def A_density(self, Lam, Gam):
        return np.sum(self.a_flux(np.asarray(Lam, dtype=float)) * Gam, axis=(-3, -2, -1))

    def B_density(self, Lam, Xi, Theta):
        return np.sum(self.b_flux(np.asarray(Lam, dtype=float), np.asarray(Xi, dtype=float)) * Theta,
                      axis=(-2, -1))

    def L_density(self, x, y, Phi):
        return np.sum(self.load(x, y) * Phi, axis=-1)


def _zero_load(k):
    return lambda x, y: np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape + (k,))


def ns_problem(nu: float = 1.0, f: Callable | None = None, exact=None) -> ProblemSpec:
    """Stream-function Navier-Stokes: ``A = nu int xi:chi``, ``B = int tr(xi) phi . rot(theta)``."""
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    load = _zero_load(1) if f is None else (lambda x, y: np.asarray(f(x, y), dtype=float)[..., None])
    return ProblemSpec("ns", 1, float(nu), lambda H: nu * H, _rot_flux, load, exact, {"nu": float(nu)})


def vk_problem(f: Callable | None = None, g: Callable | None = None, exact=None) -> ProblemSpec:
    """von Karman plate in the cancelling vector form.

    ``A = int l1:g1 + 2 int l2:g2``,
    ``B = int cof(l1) th1 . xi2 - int cof(l1) xi1 . th2`` and
    ``L = (f, phi1) + 2 (g, phi2)``; ``g`` is zero for the physical model and
    carries the manufactured source of the second equation otherwise.
    """
    weights = np.array([1.0, 2.0])[:, None, None]

    def load(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        z = np.zeros(np.broadcast(x, y).shape)
        a = z + (f(x, y) if f is not None else 0.0)
        b = z + (2.0 * g(x, y) if g is not None else 0.0)
        return np.stack([a, b], axis=-1)

    return ProblemSpec("vk", 2, 1.0, lambda H: weights * H, _vk_flux, load, exact, {})


def linear_probe(spec: ProblemSpec) -> ProblemSpec:
    """Same problem with the trilinear term switched off."""
    return replace(spec, name=spec.name + "_linear", b_flux=lambda H, G: np.zeros(G.shape))
