"""Adini rectangle: P3 enriched by x^3 y and x y^3, value and gradient DOFs at the corners."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..quadrature import affine_map, rule_for, subdivided_rule
from ._poly import ADINI, evaluate_basis, local_frame, monomials


@dataclass(frozen=True)
class AdiniLocal:
    """Local bases of a batch of rectangles; local DOF ``3j + {0, 1, 2}`` is
    (value, d/dx, d/dy) at corner ``j``."""
    coef: np.ndarray
    centre: np.ndarray
    scale: np.ndarray

    def evaluate(self, xy):
        return evaluate_basis(ADINI, self.coef, self.centre, self.scale, xy)


def adini_local_basis(coords) -> AdiniLocal:
    """Bases for one rectangle ``(4, 2)`` or a batch ``(nc, 4, 2)``."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 2:
        coords = coords[None]
    centre, scale = local_frame(coords)
    side = np.abs(np.diff(coords, axis=1, append=coords[:, :1])).max(axis=2)
    bad = np.flatnonzero(side.min(axis=1) <= 1e-12 * scale)
    if bad.size:
        raise ValueError(f"degenerate rectangle (cell {bad[0]})")
    xi = (coords[..., 0] - centre[:, None, 0]) / scale[:, None]
    eta = (coords[..., 1] - centre[:, None, 1]) / scale[:, None]
    s = scale[:, None, None]
    rows = np.stack([monomials(ADINI, xi, eta),
                     monomials(ADINI, xi, eta, 1, 0) / s,
                     monomials(ADINI, xi, eta, 0, 1) / s], axis=2)
    D = rows.reshape(len(coords), 12, 12)
    return AdiniLocal(np.linalg.inv(D), centre, scale)


class AdiniElement:
    kind = "adini"
    operator_degree = 10
    error_degree = 12

    def __init__(self, mesh):
        if mesh.cell_kind != "quad4":
            raise ValueError("the Adini element needs a rectangular mesh")
        self.mesh = mesh
        vint = ~mesh.vertex_boundary
        nvi = int(vint.sum())
        vdof = np.full(mesh.n_vertices, -1)
        vdof[vint] = np.arange(nvi)
        self.vertex_dof = vdof
        self.ndof = 3 * nvi
        base = vdof[mesh.cells]
        cd = np.where(base[..., None] >= 0, 3 * base[..., None] + np.arange(3), -1)
        self.cell_dofs = cd.reshape(mesh.n_cells, 12)
        self.local = adini_local_basis(mesh.cell_coords)

    @property
    def rule(self):
        return rule_for("quad4", self.operator_degree)

    def error_rule(self, refine=0):
        return subdivided_rule("quad4", self.error_degree, refine) if refine else rule_for("quad4", self.error_degree)

    def tables(self, ref_points, cells=None):
        xy, _ = affine_map(self.mesh, ref_points, cells)
        L = self.local if cells is None else AdiniLocal(self.local.coef[cells], self.local.centre[cells],
                                                        self.local.scale[cells])
        return L.evaluate(xy)

    def interpolate(self, value, gradient):
        m = self.mesh
        vi = self.vertex_dof >= 0
        x, y = m.vertices[vi, 0], m.vertices[vi, 1]
        out = np.zeros((int(vi.sum()), 3))
        out[:, 0] = value(x, y)
        out[:, 1:] = gradient(x, y)
        return out.ravel()
