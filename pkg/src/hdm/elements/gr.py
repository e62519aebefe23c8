"""Gradient-recovery Hessian discretisation on continuous P1.

``Pi u = u``, ``grad_D u = Q_h grad u`` and
``H_D u = grad(Q_h grad u) + S_h (x) (Q_h grad u - grad u)``.

``Q_h`` is the biorthogonal projection onto continuous P1 with zero boundary
values built from the dual basis ``b_i = 4 phi_i - 1``.  On piecewise
constant data it is the area-weighted average over the vertex patch.
``S_h`` is constant on each of the four red children of a triangle and is
chosen so that its P1 moments on the triangle vanish.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from ..quadrature import affine_map, map_points, rule_for, subdivided_rule

DIRECTION = np.array([1.0, 1.0]) / np.sqrt(2.0)
S_BOUND = 10.0


def barycentric(ref_points):
    p = np.asarray(ref_points, dtype=float)
    return np.stack([1.0 - p[:, 0] - p[:, 1], p[:, 0], p[:, 1]], axis=1)


def child_index(ref_points):
    """Red child containing each reference point: corner child ``i`` or 3 for the middle one."""
    lam = barycentric(ref_points)
    i = lam.argmax(axis=1)
    return np.where(lam.max(axis=1) > 0.5, i, 3)


def _child_moments(coords):
    """Moments of the child indicators against (1, x, y): shape ``(nc, 3, 4)``."""
    a, b, c = coords[:, 0], coords[:, 1], coords[:, 2]
    cents = np.stack([(4 * a + b + c) / 6, (a + 4 * b + c) / 6, (a + b + 4 * c) / 6, (a + b + c) / 3], axis=1)
    M = np.ones((len(coords), 3, 4))
    M[:, 1:, :] = np.transpose(cents, (0, 2, 1))
    return M


def stabilisation_values(coords):
    """Child values ``s`` (``nc, 4``) with vanishing P1 moments, min |s| = 1, middle child negative."""
    M = _child_moments(coords)
    # scale rows so the rank test is independent of the cell size
    M[:, 1:] -= coords.mean(axis=1)[:, :, None]
    M[:, 1:] /= np.linalg.norm(coords[:, 1] - coords[:, 0], axis=1)[:, None, None]
    _, sv, vt = np.linalg.svd(M)
    bad = np.flatnonzero(sv[:, -1] < 1e-10 * sv[:, 0])
    if bad.size:
        raise ValueError(f"stabilisation field undefined on degenerate cell {bad[0]}")
    s = vt[:, -1, :]
    s = s / np.abs(s).min(axis=1, keepdims=True)
    return s * -np.sign(s[:, 3:4])


@dataclass(eq=False)
class GrStructures:
    mesh: object
    vertex_dof: np.ndarray
    ndof: int
    grad_lambda: np.ndarray      # (nc, 3, 2) gradients of the hat functions
    patch_weight: sp.csr_matrix  # (nv, nc) area weights of the vertex patch averages
    R: sp.csr_matrix             # (2 nv, ndof) vertex values of Q_h grad u
    s_child: np.ndarray          # (nc, 4)
    cell_dofs: np.ndarray        # (nc, nl) padded with -1
    W: np.ndarray                # (nc, 3, 2, nl) R restricted to the cell stencil
    D: np.ndarray                # (nc, nl, 2) broken gradient of each stencil basis
    own_pos: np.ndarray          # (nc, 3) stencil position of each cell vertex, -1 on the boundary

    @property
    def S(self):
        """Stabilisation vector on each child, ``(nc, 4, 2)``."""
        return self.s_child[..., None] * DIRECTION


def gr_build(mesh) -> GrStructures:
    if mesh.cell_kind != "tri3":
        raise ValueError("the GR method needs a triangular mesh")
    nv, nc = mesh.n_vertices, mesh.n_cells
    x = mesh.cell_coords
    vint = ~mesh.vertex_boundary
    vdof = np.full(nv, -1)
    vdof[vint] = np.arange(int(vint.sum()))
    ndof = int(vint.sum())

    # gradients of barycentric coordinates: rows of inv([[x1-x0, x2-x0]])
    J = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=2)
    Ji = np.linalg.inv(J)
    gl = np.concatenate([-Ji.sum(axis=1, keepdims=True), Ji], axis=1)

    area = mesh.areas
    rows = mesh.cells.ravel()
    cols = np.repeat(np.arange(nc), 3)
    P = sp.csr_matrix((np.repeat(area, 3), (rows, cols)), shape=(nv, nc))
    patch = np.asarray(P.sum(axis=1)).ravel()
    scale = np.where(vint, 1.0 / np.where(patch > 0, patch, 1.0), 0.0)
    P = sp.diags(scale) @ P

    # broken gradient: row 2K + c
    own = vdof[mesh.cells]
    ok = own >= 0
    cr = (2 * np.arange(nc)[:, None, None] + np.arange(2)).repeat(3, axis=1).reshape(nc, 3, 2)
    G = sp.csr_matrix((gl[ok].ravel(), (cr[ok].ravel(), np.repeat(own[ok], 2))), shape=(2 * nc, ndof))
    R = (sp.kron(P, sp.identity(2)) @ G).tocsr()
    R.sort_indices()

    # padded rows of R
    nnz = np.diff(R.indptr)
    w = int(nnz.max()) if nnz.size else 1
    rc = np.full((R.shape[0], w), -1)
    rv = np.zeros((R.shape[0], w))
    ridx = np.repeat(np.arange(R.shape[0]), nnz)
    rpos = np.arange(R.nnz) - np.repeat(R.indptr[:-1], nnz)
    rc[ridx, rpos] = R.indices
    rv[ridx, rpos] = R.data

    rsel = 2 * mesh.cells[:, :, None] + np.arange(2)
    ccols = rc[rsel]                      # (nc, 3, 2, w)
    cvals = rv[rsel]
    big = ndof
    cand = np.concatenate([ccols.reshape(nc, -1), own], axis=1)
    cand = np.where(cand >= 0, cand, big)
    cand.sort(axis=1)
    dup = np.zeros_like(cand, dtype=bool)
    dup[:, 1:] = cand[:, 1:] == cand[:, :-1]
    cand[dup] = big
    cand.sort(axis=1)
    nl = max(int((cand < big).sum(axis=1).max()), 1)
    stencil = cand[:, :nl]
    keys = (np.arange(nc)[:, None] * (ndof + 1) + stencil).ravel()

    def position(cells, dofs):
        return np.searchsorted(keys, cells * (ndof + 1) + dofs) - cells * nl

    Wl = np.zeros((nc, 3, 2, nl))
    valid = ccols >= 0
    kk = np.broadcast_to(np.arange(nc)[:, None, None, None], ccols.shape)
    aa = np.broadcast_to(np.arange(3)[None, :, None, None], ccols.shape)
    cc = np.broadcast_to(np.arange(2)[None, None, :, None], ccols.shape)
    Wl[kk[valid], aa[valid], cc[valid], position(kk[valid], ccols[valid])] = cvals[valid]

    own_pos = np.full((nc, 3), -1)
    kc = np.broadcast_to(np.arange(nc)[:, None], own.shape)
    own_pos[ok] = position(kc[ok], own[ok])
    Dl = np.zeros((nc, nl, 2))
    Dl[kc[ok], own_pos[ok]] = gl[ok]

    cell_dofs = np.where(stencil < big, stencil, -1)
    return GrStructures(mesh, vdof, ndof, gl, P.tocsr(), R, stabilisation_values(x),
                        cell_dofs, Wl, Dl, own_pos)


def gr_tables(gr: GrStructures, ref_points, cells=None, s_child=None):
    """Per-cell (Pi, grad_D, H_D) tables of the stencil basis at reference points."""
    sl = slice(None) if cells is None else cells
    W, D, gl, own_pos = gr.W[sl], gr.D[sl], gr.grad_lambda[sl], gr.own_pos[sl]
    s = (gr.s_child if s_child is None else s_child)[sl]
    nc, nl = W.shape[0], W.shape[-1]
    lam = barycentric(ref_points)
    nq = len(lam)
    pi = np.zeros((nc, nq, nl))
    for a in range(3):
        k = np.flatnonzero(own_pos[:, a] >= 0)
        pi[k, :, own_pos[k, a]] = lam[None, :, a]
    grad = np.einsum("qa,karl->kqlr", lam, W)
    gq = np.einsum("kac,karl->klrc", gl, W)
    S = s[:, child_index(ref_points)][..., None] * DIRECTION     # (nc, nq, 2)
    hess = gq[:, None] + S[:, :, None, :, None] * (grad - D[:, None])[:, :, :, None, :]
    return pi, grad, hess


class GrElement:
    kind = "gr"
    # every integrand of the scheme is at most cubic on each red child
    operator_degree = 3
    error_degree = 12

    def __init__(self, mesh):
        self.mesh = mesh
        self.gr = gr_build(mesh)
        self.ndof = self.gr.ndof
        self.cell_dofs = self.gr.cell_dofs

    @property
    def rule(self):
        return subdivided_rule("tri3", self.operator_degree, 1)

    def error_rule(self, refine=0):
        return subdivided_rule("tri3", self.error_degree, 1 + refine)

    def tables(self, ref_points, cells=None):
        return gr_tables(self.gr, ref_points, cells)

    def interpolate(self, value, gradient=None):
        m = self.mesh
        vi = self.gr.vertex_dof >= 0
        return np.asarray(value(m.vertices[vi, 0], m.vertices[vi, 1]), dtype=float)


def gr_p5_residual(gr: GrStructures, cell: int, s_child=None) -> float:
    """Largest normalised moment ``|int_K (S (x) w) : grad z|`` over a spanning set.

    ``w`` runs over ``e_c lambda_a`` (all P1 vector fields on the cell, which
    contain ``(Q_h grad - grad) V_h(K)``) and ``grad z`` over the unit
    matrices.  Normalised by ``|K|`` (``|w|_inf = 1``).
    """
    s = gr.s_child[cell] if s_child is None else np.asarray(s_child, dtype=float)
    rule = subdivided_rule("tri3", 2, 1)
    lam = barycentric(rule.points)
    sq = s[child_index(rule.points)]
    mom = (rule.weights * sq) @ lam * 2.0      # int_K s lambda_a / |K|
    return float(np.abs(mom).max() * np.abs(DIRECTION).max())


def gr_p5_residuals(gr: GrStructures) -> np.ndarray:
    rule = subdivided_rule("tri3", 2, 1)
    lam = barycentric(rule.points)
    sq = gr.s_child[:, child_index(rule.points)]
    mom = np.einsum("q,kq,qa->ka", rule.weights, sq, lam) * 2.0
    return np.abs(mom).max(axis=1) * np.abs(DIRECTION).max()


def gr_apply_q(gr: GrStructures, g, degree=8):
    """Vertex coefficients of ``Q_h g`` for a scalar callable ``g(x, y)``."""
    m = gr.mesh
    rule = rule_for("tri3", degree)
    xy, w = map_points(m, rule)
    b = 4.0 * barycentric(rule.points) - 1.0         # dual basis on every cell
    loc = np.einsum("kq,kq,qa->ka", w, g(xy[..., 0], xy[..., 1]), b)
    num = np.bincount(m.cells.ravel(), loc.ravel(), minlength=m.n_vertices)
    den = np.bincount(m.cells.ravel(), np.repeat(m.areas, 3) / 3.0, minlength=m.n_vertices)
    return np.where(gr.vertex_dof >= 0, num / den, 0.0)


def _p1_eval(m, vals, rule):
    lam = barycentric(rule.points)
    v = vals[m.cells]
    return np.einsum("qa,ka->kq", lam, v)


def _p1_grad(m, vals, gl):
    return np.einsum("kac,ka->kc", gl, vals[m.cells])


def q_stability(gr: GrStructures) -> float:
    """``sup ||Q_h g|| / ||g||`` over piecewise constant ``g`` (exact, via an eigenproblem)."""
    m = gr.mesh
    vi = gr.vertex_dof >= 0
    A = gr.patch_weight[vi]                                  # interior rows only
    # P1 mass matrix on interior vertices
    loc = np.einsum("k,ab->kab", m.areas / 12.0, np.ones((3, 3)) + np.eye(3))
    r = np.repeat(m.cells, 3, axis=1).ravel()
    c = np.tile(m.cells, (1, 3)).ravel()
    Mv = sp.csr_matrix((loc.ravel(), (r, c)), shape=(m.n_vertices,) * 2)[vi][:, vi]
    dinv = sp.diags(1.0 / np.sqrt(m.areas))
    K = (dinv @ A.T @ Mv @ A @ dinv).tocsr()
    if K.shape[0] > 400:
        top = eigsh(K, k=1, which="LA", return_eigenvectors=False)[0]
    else:
        top = np.linalg.eigvalsh(K.toarray())[-1]
    return float(np.sqrt(max(top, 0.0)))


def gr_property_report(meshes, phi):
    """Decay proxies of the GR properties on a mesh sequence.

    ``phi`` provides ``value``/``gradient`` callables of a smooth function
    vanishing with its gradient on the boundary.  Returns one dict per mesh
    with ``h``, ``p0`` = ||grad I_h phi - grad phi||, ``p1`` = sup ||Q_h g||/||g||
    over piecewise constants, ``p2`` = ||Q_h grad I_h phi - grad phi||,
    ``p3`` = ||grad Q_h phi - grad phi||.
    """
    rows = []
    for m in meshes:
        gr = gr_build(m)
        rule = rule_for("tri3", 10)
        xy, w = map_points(m, rule)
        X, Y = xy[..., 0], xy[..., 1]
        gex = phi.gradient(X, Y)
        iv = np.where(gr.vertex_dof >= 0, phi.value(m.vertices[:, 0], m.vertices[:, 1]), 0.0)
        gI = _p1_grad(m, iv, gr.grad_lambda)
        p0 = np.sqrt(np.sum(w[..., None] * (gI[:, None, :] - gex) ** 2))
        qv = (gr.R @ iv[gr.vertex_dof >= 0]).reshape(-1, 2)
        qg = np.stack([_p1_eval(m, qv[:, c], rule) for c in range(2)], axis=-1)
        p2 = np.sqrt(np.sum(w[..., None] * (qg - gex) ** 2))
        qphi = gr_apply_q(gr, phi.value)
        p3 = np.sqrt(np.sum(w[..., None] * (_p1_grad(m, qphi, gr.grad_lambda)[:, None, :] - gex) ** 2))
        rows.append({"h": m.h, "p0": float(p0), "p1": q_stability(gr), "p2": float(p2), "p3": float(p3)})
    return rows
