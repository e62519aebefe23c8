"""Quadrature rules on the reference triangle and the reference square.

Reference triangle: vertices (0, 0), (1, 0), (0, 1), area 1/2.
Reference square: [0, 1]^2.  Triangle rules are the fully symmetric
Xiao--Gimbutas rules shipped with :mod:`modepy`; square rules are tensor
Gauss--Legendre products.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_TRI_DEGREE = 14
MAX_QUAD_DEGREE = 17


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int
    cell_kind: str

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def rule_for(cell_kind: str, degree: int) -> QuadRule:
    """Positive-weight rule exact for polynomials of total degree ``degree``
    (triangles) or of degree ``degree`` in each variable (squares)."""
    degree = max(int(degree), 1)
    if cell_kind == "tri3":
        if degree > MAX_TRI_DEGREE:
            raise ValueError(f"no triangle rule of degree {degree} (max {MAX_TRI_DEGREE})")
        import modepy

        q = modepy.XiaoGimbutasSimplexQuadrature(degree, 2)
        # modepy uses the bi-unit triangle (-1,-1), (1,-1), (-1,1)
        pts = (q.nodes.T + 1.0) / 2.0
        w = q.weights / 4.0
        w = w * (0.5 / w.sum())
        rule = QuadRule(pts, w, int(q.exact_to), "tri3")
    elif cell_kind == "quad4":
        if degree > MAX_QUAD_DEGREE:
            raise ValueError(f"no square rule of degree {degree} (max {MAX_QUAD_DEGREE})")
        npt = degree // 2 + 1
        x, w = np.polynomial.legendre.leggauss(npt)
        x, w = (x + 1) / 2, w / 2
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        rule = QuadRule(np.stack([X.ravel(), Y.ravel()], axis=1), W.ravel(), 2 * npt - 1, "quad4")
    else:
        raise ValueError(f"unknown cell kind {cell_kind!r}")
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def _red_children_tri():
    a, b, c = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
    return [(a, ab, ca), (ab, b, bc), (ca, bc, c), (bc, ca, ab)]


@lru_cache(maxsize=None)
def subdivided_rule(cell_kind: str, degree: int, levels: int = 1) -> QuadRule:
    """Composite rule obtained by ``levels`` uniform (red) splits of the reference cell."""
    rule = rule_for(cell_kind, degree)
    for _ in range(levels):
        pts, wts = [], []
        if cell_kind == "tri3":
            for v0, v1, v2 in _red_children_tri():
                J = np.column_stack([v1 - v0, v2 - v0])
                pts.append(v0 + rule.points @ J.T)
                wts.append(rule.weights / 4.0)
        else:
            for shift in ([0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]):
                pts.append(np.asarray(shift) + 0.5 * rule.points)
                wts.append(rule.weights / 4.0)
        rule = QuadRule(np.vstack(pts), np.concatenate(wts), rule.exact_degree, cell_kind)
    return rule


def gauss_line(degree: int):
    """Gauss-Legendre points/weights on [0, 1]."""
    npt = max(int(degree), 1) // 2 + 1
    x, w = np.polynomial.legendre.leggauss(npt)
    return (x + 1) / 2, w / 2


def affine_map(mesh, ref_points, cells=None):
    """Map reference points to every cell: ``(xy, det)`` with shapes ``(nc, nq, 2)``, ``(nc,)``.

    The map uses vertices 0, 1 and the last vertex, which is affine for
    triangles and for parallelograms (axis-aligned rectangles included).
    """
    x = mesh.cell_coords if cells is None else mesh.vertices[mesh.cells[cells]]
    v0, v1, v2 = x[:, 0], x[:, 1], x[:, -1]
    e1, e2 = v1 - v0, v2 - v0
    ref = np.asarray(ref_points, dtype=float)
    xy = v0[:, None, :] + ref[:, 0, None] * e1[:, None, :] + ref[:, 1, None] * e2[:, None, :]
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return xy, det


def map_points(mesh, rule: QuadRule, cells=None):
    """Physical quadrature points ``(nc, nq, 2)`` and weights ``(nc, nq)``."""
    xy, det = affine_map(mesh, rule.points, cells)
    return xy, det[:, None] * rule.weights[None, :]


def integrate_on_cell(mesh, cell: int, f, degree: int) -> float:
    rule = rule_for(mesh.cell_kind, degree)
    xy, w = map_points(mesh, rule, np.array([cell]))
    return float(np.sum(w[0] * f(xy[0, :, 0], xy[0, :, 1])))


def integrate(mesh, f, degree: int) -> float:
    """Integral of the pointwise function ``f(x, y)`` over the whole mesh."""
    rule = rule_for(mesh.cell_kind, degree)
    xy, w = map_points(mesh, rule)
    return float(np.sum(w * f(xy[..., 0], xy[..., 1])))
