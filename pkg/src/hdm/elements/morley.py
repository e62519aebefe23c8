"""Morley element: piecewise P2 with vertex values and edge-midpoint normal derivatives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..quadrature import affine_map, rule_for, subdivided_rule
from ._poly import P2, evaluate_basis, local_frame, monomials

# local edge i is opposite local vertex i
_EDGE_VERTS = np.array([(1, 2), (2, 0), (0, 1)])


@dataclass(frozen=True)
class MorleyLocal:
    """Local P2 bases of a batch of triangles.

    ``coef[c, :, l]`` holds the scaled-monomial coefficients of basis ``l`` of
    triangle ``c``.  Local DOFs 0-2 are vertex values, 3-5 normal derivatives
    at the midpoints of the edges opposite vertices 0-2, along ``normals``.
    """
    coef: np.ndarray
    centre: np.ndarray
    scale: np.ndarray
    normals: np.ndarray

    def evaluate(self, xy):
        return evaluate_basis(P2, self.coef, self.centre, self.scale, xy)

    def dof_functionals(self, value, gradient, coords):
        """Apply the six DOFs to a function given by ``value``/``gradient`` callables."""
        mids = 0.5 * (coords[:, _EDGE_VERTS[:, 0]] + coords[:, _EDGE_VERTS[:, 1]])
        v = value(coords[..., 0], coords[..., 1])
        g = gradient(mids[..., 0], mids[..., 1])
        return np.concatenate([v, np.sum(g * self.normals, axis=-1)], axis=1)


def _outward_normals(coords):
    t = coords[:, _EDGE_VERTS[:, 1]] - coords[:, _EDGE_VERTS[:, 0]]
    n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def morley_local_basis(coords, normals=None) -> MorleyLocal:
    """Build Morley bases for one triangle ``(3, 2)`` or a batch ``(nc, 3, 2)``.

    ``normals`` fixes the direction of each normal-derivative DOF; by
    default the outward unit normals are used.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 2:
        coords = coords[None]
    if normals is None:
        normals = _outward_normals(coords)
    normals = np.asarray(normals, dtype=float).reshape(coords.shape)
    area2 = ((coords[:, 1, 0] - coords[:, 0, 0]) * (coords[:, 2, 1] - coords[:, 0, 1])
             - (coords[:, 1, 1] - coords[:, 0, 1]) * (coords[:, 2, 0] - coords[:, 0, 0]))
    centre, scale = local_frame(coords)
    bad = np.flatnonzero(np.abs(area2) <= 1e-12 * scale ** 2)
    if bad.size:
        raise ValueError(f"degenerate triangle (cell {bad[0]})")

    def local(p):
        return (p[..., 0] - centre[:, None, 0]) / scale[:, None], (p[..., 1] - centre[:, None, 1]) / scale[:, None]

    xi, eta = local(coords)
    mids = 0.5 * (coords[:, _EDGE_VERTS[:, 0]] + coords[:, _EDGE_VERTS[:, 1]])
    mxi, meta = local(mids)
    dn = (normals[..., 0, None] * monomials(P2, mxi, meta, 1, 0)
          + normals[..., 1, None] * monomials(P2, mxi, meta, 0, 1)) / scale[:, None, None]
    D = np.concatenate([monomials(P2, xi, eta), dn], axis=1)
    return MorleyLocal(np.linalg.inv(D), centre, scale, normals)


class MorleyElement:
    """Global Morley space on a triangular mesh with clamped boundary DOFs removed."""

    kind = "morley"
    operator_degree = 6
    error_degree = 12

    def __init__(self, mesh):
        if mesh.cell_kind != "tri3":
            raise ValueError("the Morley element needs a triangular mesh")
        self.mesh = mesh
        vint = ~mesh.vertex_boundary
        eint = ~mesh.edge_boundary
        nvi = int(vint.sum())
        self.vertex_dof = np.full(mesh.n_vertices, -1)
        self.vertex_dof[vint] = np.arange(nvi)
        self.edge_dof = np.full(mesh.n_edges, -1)
        self.edge_dof[eint] = nvi + np.arange(int(eint.sum()))
        self.ndof = nvi + int(eint.sum())
        self.cell_dofs = np.hstack([self.vertex_dof[mesh.cells], self.edge_dof[mesh.cell_edges]])
        # DOF directions follow the global edge normal so shared DOFs are single valued
        self.local = morley_local_basis(mesh.cell_coords, mesh.edge_normals[mesh.cell_edges])

    @property
    def rule(self):
        return rule_for("tri3", self.operator_degree)

    def error_rule(self, refine=0):
        return subdivided_rule("tri3", self.error_degree, refine) if refine else rule_for("tri3", self.error_degree)

    def _sub(self, cells):
        if cells is None:
            return self.local
        L = self.local
        return MorleyLocal(L.coef[cells], L.centre[cells], L.scale[cells], L.normals[cells])

    def tables(self, ref_points, cells=None):
        """Basis values ``(nc, nq, 6)``, gradients ``(..., 2)`` and Hessians ``(..., 2, 2)``."""
        xy, _ = affine_map(self.mesh, ref_points, cells)
        return self._sub(cells).evaluate(xy)

    def interpolate(self, value, gradient):
        m = self.mesh
        out = np.zeros(self.ndof)
        vi = self.vertex_dof >= 0
        out[self.vertex_dof[vi]] = value(m.vertices[vi, 0], m.vertices[vi, 1])
        ei = self.edge_dof >= 0
        mid = m.edge_midpoints[ei]
        out[self.edge_dof[ei]] = np.sum(gradient(mid[:, 0], mid[:, 1]) * m.edge_normals[ei], axis=-1)
        return out
