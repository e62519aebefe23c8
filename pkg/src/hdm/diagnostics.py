"""Accuracy measures of a Hessian discretisation.

* coercivity: ``max ||Pi w|| / ||H w||`` (exact, generalised eigenproblem) and
  ``max ||grad_D w||_L4 / ||H w||`` (sampled);
* consistency: interpolation error of a smooth function, taken at the
  canonical interpolant (an upper bound of the minimum over the space);
* limit-conformity: the defects ``W(xi)`` of the double integration by parts
  and ``What(phi)`` of the Stokes formula.  Both are suprema of a linear
  functional ``r`` over the unit ball of the Hessian norm, so they equal
  ``sqrt(r^T G^-1 r)`` with ``G`` the Gram matrix of ``H_D``;
* the broken (dG) norm with edge-jump penalty, and the a priori bound
  ``||Psi||_D <= C ||L|| / alpha`` for a solution.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import sympy
from scipy.sparse.linalg import eigsh, splu

from .core import ExactFunctionBundle, SmoothFunction, hd_norm, interpolate
from .quadrature import gauss_line, rule_for, subdivided_rule
from .solver import assemble_load

CHUNK = 2048
DENSE_LIMIT = 300


class DiagnosticsError(ValueError):
    pass


# -- fixed smooth test fields ------------------------------------------------

@dataclass
class MatrixField:
    """Smooth 2x2 field ``xi`` with its double divergence ``sum_ij d_i d_j xi_ij``."""
    entries: list          # 2x2 nested list of SmoothFunction

    def __call__(self, x, y):
        return np.stack([np.stack([self.entries[i][j].value(x, y) for j in range(2)], -1)
                         for i in range(2)], -2)

    def divdiv(self, x, y):
        e = self.entries
        return (e[0][0].derivative(2, 0)(x, y) + e[0][1].derivative(1, 1)(x, y)
                + e[1][0].derivative(1, 1)(x, y) + e[1][1].derivative(0, 2)(x, y))


@dataclass
class VectorField:
    """Smooth vector field with its divergence."""
    comps: list            # two SmoothFunction

    def __call__(self, x, y):
        return np.stack([c.value(x, y) for c in self.comps], -1)

    def div(self, x, y):
        return self.comps[0].derivative(1, 0)(x, y) + self.comps[1].derivative(0, 1)(x, y)


def matrix_field(exprs) -> MatrixField:
    return MatrixField([[SmoothFunction(e) for e in row] for row in exprs])


def vector_field(exprs) -> VectorField:
    return VectorField([SmoothFunction(e) for e in exprs])


def default_xi() -> MatrixField:
    """``[[s, q], [q, s]]`` with ``s = sin(pi x) sin(pi y)``, ``q = x^2 y (1 - x)``."""
    X, Y = SmoothFunction.X, SmoothFunction.Y
    s = sympy.sin(sympy.pi * X) * sympy.sin(sympy.pi * Y)
    q = X ** 2 * Y * (1 - X)
    return matrix_field([[s, q], [q, s]])


def default_phi() -> VectorField:
    """``(sin(pi x) sin(pi y), x y (1 - x)(1 - y))``."""
    X, Y = SmoothFunction.X, SmoothFunction.Y
    return vector_field([sympy.sin(sympy.pi * X) * sympy.sin(sympy.pi * Y), X * Y * (1 - X) * (1 - Y)])


# -- Riesz values ------------------------------------------------------------

def spd_factor(G):
    """LU of a Gram matrix without off-diagonal pivoting; positive pivots certify SPD."""
    G = sp.csc_matrix(G)
    if G.shape[0] and abs(G - G.T).max() > 1e-12 * abs(G).max():
        raise DiagnosticsError("Gram matrix is not symmetric")
    try:
        lu = splu(G, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise DiagnosticsError(f"Gram matrix is singular: {exc}") from exc
    d = lu.U.diagonal()
    if d.size and (np.any(lu.perm_r != lu.perm_c) or d.min() <= 1e-14 * d.max()):
        raise DiagnosticsError("Gram matrix is not positive definite")
    return lu


def riesz_value(G, r, return_maximiser=False):
    """``sup_w |r.w| / sqrt(w^T G w) = sqrt(r^T G^-1 r)``."""
    r = np.asarray(r, dtype=float)
    z = spd_factor(G).solve(r)
    val = float(np.sqrt(max(r @ z, 0.0)))
    if not return_maximiser:
        return val
    return val, (z / val if val > 0 else z)


def sampled_sup(G, r, n_samples=500, seed=0, extra=()):
    """Brute-force ``max |r.w| / sqrt(w^T G w)`` over random ``w`` (plus ``extra`` vectors)."""
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((len(r), n_samples))
    if len(extra):
        V = np.column_stack([V] + [np.asarray(e, dtype=float) for e in extra])
    num = np.abs(np.asarray(r) @ V)
    den = np.sqrt(np.einsum("ij,ij->j", V, G @ V))
    return float(np.max(num / den))


# -- integrals against the basis ---------------------------------------------

def smooth_rule(hd):
    """High-order rule for smooth integrands, aligned with the GR children."""
    if hd.mesh.cell_kind == "quad4":
        return subdivided_rule("quad4", 17, 1)
    return subdivided_rule("tri3", 14, 1)


def _basis_vector(hd, rule, local):
    """Global vector of ``sum_q w * local(xy, pi, grad, hess)`` per basis function."""
    nc = hd.mesh.n_cells
    out = np.zeros((nc, hd.n_local))
    for s in range(0, nc, CHUNK):
        cells = np.arange(s, min(s + CHUNK, nc))
        xy, w = hd.quadrature(rule, cells)
        pi, grad, hess = hd.element.tables(rule.points, cells)
        out[cells] = np.einsum("cq,cql->cl", w, local(xy[..., 0], xy[..., 1], pi, grad, hess))
    return hd.pattern(1).vector(out)


def conformity_functional_w(hd, xi=None):
    """``r_i = int (H:xi) Pi chi_i - xi : H_D chi_i``."""
    xi = default_xi() if xi is None else xi

    def local(x, y, pi, grad, hess):
        return xi.divdiv(x, y)[..., None] * pi - np.einsum("cqrs,cqlrs->cql", xi(x, y), hess)

    return _basis_vector(hd, smooth_rule(hd), local)


def conformity_functional_what(hd, phi=None):
    """``r_i = int grad_D chi_i . phi + Pi chi_i div phi``."""
    phi = default_phi() if phi is None else phi

    def local(x, y, pi, grad, hess):
        return np.einsum("cqd,cqld->cql", phi(x, y), grad) + phi.div(x, y)[..., None] * pi

    return _basis_vector(hd, smooth_rule(hd), local)


def limit_conformity_w(hd, xi=None) -> float:
    return riesz_value(hd.hess_gram, conformity_functional_w(hd, xi))


def limit_conformity_what(hd, phi=None) -> float:
    return riesz_value(hd.hess_gram, conformity_functional_what(hd, phi))


# -- coercivity --------------------------------------------------------------

def _l4_rule(hd):
    # |grad_D w|^4 is a polynomial of degree 4 (P1 gradients) or of tensor degree 12 (Adini)
    return rule_for("quad4", 12) if hd.mesh.cell_kind == "quad4" else rule_for("tri3", 4)


def l4_norms(hd, V, rule=None):
    """``||grad_D w||_L4`` for every column ``w`` of ``V`` (ndof, S)."""
    rule = _l4_rule(hd) if rule is None else rule
    V = np.asarray(V, dtype=float).reshape(hd.ndof, -1)
    acc = np.zeros(V.shape[1])
    nc = hd.mesh.n_cells
    for s in range(0, nc, CHUNK // 4):
        cells = np.arange(s, min(s + CHUNK // 4, nc))
        _, w = hd.quadrature(rule, cells)
        _, grad, _ = hd.element.tables(rule.points, cells)
        G = np.einsum("cqld,cls->csqd", grad, hd.local_coeffs(V, cells))
        acc += np.einsum("cq,csq->s", w, np.sum(G * G, axis=-1) ** 2)
    return acc ** 0.25


def coercivity_constant(hd, n_samples=200, seed=0, method="auto") -> dict:
    """``{"l2_part", "l4_part"}`` of the coercivity constant.

    ``l2_part`` is the square root of the largest eigenvalue of
    ``M w = lambda G w`` (``M`` the Gram matrix of ``Pi``, ``G`` that of
    ``H_D``); ``method`` picks a dense or a sparse shift-invert solve.
    ``l4_part`` is a sampled lower estimate seeded with the ``l2`` maximiser.
    """
    M, G = hd.pi_gram, hd.hess_gram
    spd_factor(G)
    n = hd.ndof
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "sparse"
    if method == "dense":
        lam, vec = scipy.linalg.eigh(M.toarray(), G.toarray(), subset_by_index=[n - 1, n - 1])
        lmax, top = float(lam[0]), vec[:, 0]
    elif method == "sparse":
        mu, vec = eigsh(sp.csc_matrix(G), k=1, M=sp.csc_matrix(M), sigma=0.0, which="LM", tol=1e-14)
        lmax, top = 1.0 / float(mu[0]), vec[:, 0]
    else:
        raise ValueError(f"unknown method {method!r}")
    if not lmax > 0:
        raise DiagnosticsError("Gram matrix of Pi is not positive definite")
    rng = np.random.default_rng(seed)
    V = np.column_stack([rng.standard_normal((n, n_samples)), top])
    hn = np.sqrt(np.einsum("ij,ij->j", V, G @ V))
    l4 = l4_norms(hd, V) / hn
    return {"l2_part": float(np.sqrt(lmax)), "l4_part": float(l4.max()), "maximiser": top}


# -- consistency -------------------------------------------------------------

def consistency_upper(hd, phi, parts=False):
    """``||Pi w - phi|| + ||grad_D w - grad phi||_L4 + ||H_D w - H phi||`` at ``w = I phi``."""
    bundle = phi if isinstance(phi, ExactFunctionBundle) else ExactFunctionBundle([phi])
    w = interpolate(hd, bundle)
    rule = hd.element.error_rule(0)
    acc = np.zeros(3)
    nc = hd.mesh.n_cells
    for s in range(0, nc, CHUNK):
        cells = np.arange(s, min(s + CHUNK, nc))
        xy, wt, P, G, H = hd.evaluate(w.coeffs, rule, cells)
        x, y = xy[..., 0], xy[..., 1]
        for c in range(bundle.k):
            f = bundle[c]
            eg = G[..., c, :] - f.gradient(x, y)
            acc += [np.sum(wt * (P[..., c] - f.value(x, y)) ** 2),
                    np.sum(wt * np.sum(eg * eg, axis=-1) ** 2),
                    np.sum(wt[..., None, None] * (H[..., c, :, :] - f.hessian(x, y)) ** 2)]
    terms = (float(np.sqrt(acc[0])), float(acc[1] ** 0.25), float(np.sqrt(acc[2])))
    return terms if parts else float(sum(terms))


# -- broken norm with jumps --------------------------------------------------

LOCAL_EDGES = {"tri3": ((1, 2), (2, 0), (0, 1)), "quad4": ((0, 1), (1, 2), (2, 3), (3, 0))}
REF_VERTICES = {"tri3": np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                "quad4": np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])}


def broken_tables(hd, ref_points, cells):
    """Values and broken gradients of ``Pi`` and ``grad_D`` per basis function.

    Returns ``(pi (c,q,l), dpi (c,q,l,2), gd (c,q,l,2), dgd (c,q,l,2,2))`` where
    ``dgd[..., r, c]`` is the derivative of component ``r`` along ``x_c``.
    """
    pi, grad, hess = hd.element.tables(ref_points, cells)
    if hd.element_kind != "gr":
        return pi, grad, grad, hess
    gr = hd.element.gr
    nq = len(ref_points)
    D = gr.D[cells]
    gq = np.einsum("kac,karl->klrc", gr.grad_lambda[cells], gr.W[cells])
    shape = (len(cells), nq) + D.shape[1:]
    return (pi, np.broadcast_to(D[:, None], shape), grad,
            np.broadcast_to(gq[:, None], shape[:3] + (2, 2)))


def _edge_point_tables(hd, which, degree):
    """Traces of ``which`` in {"pi", "grad"} at Gauss points of every edge, both sides."""
    m = hd.mesh
    t, wt = gauss_line(degree)
    nt, nl = len(t), hd.n_local
    ncomp = 1 if which == "pi" else 2
    tr = np.zeros((m.n_edges, 2, nt, ncomp, nl))
    dofs = np.full((m.n_edges, 2, nl), -1)
    R = REF_VERTICES[m.cell_kind]
    for e, (a, b) in enumerate(LOCAL_EDGES[m.cell_kind]):
        ref = R[a] + t[:, None] * (R[b] - R[a])
        for s in range(0, m.n_cells, CHUNK):
            cells = np.arange(s, min(s + CHUNK, m.n_cells))
            pi, _, gd, _ = broken_tables(hd, ref, cells)
            v = pi[:, :, None, :] if which == "pi" else np.moveaxis(gd, -1, 2)
            g = m.cell_edges[cells, e]
            flip = m.cells[cells, a] != m.edges[g, 0]         # follow the global edge direction
            v = np.where(flip[:, None, None, None], v[:, ::-1], v)
            side = (m.edge_cells[g, 1] == cells).astype(int)
            tr[g, side] = v
            dofs[g, side] = hd.cell_dofs[cells]
    return tr, dofs, wt


def dg_matrix(hd, which="pi", degree=None) -> sp.csr_matrix:
    """Quadratic form of the dG norm of ``Pi w`` (``which="pi"``) or of ``grad_D w``.

    ``||w||_dG^2 = ||grad_M w||^2 + sum_edges |e|^-1 ||[w]||_e^2``; boundary
    edges count with the outer trace set to zero.
    """
    if which not in ("pi", "grad"):
        raise ValueError("which must be 'pi' or 'grad'")
    kind = hd.mesh.cell_kind
    degree = (12 if kind == "quad4" else 8) if degree is None else degree
    rule = rule_for(kind, degree)
    nc = hd.mesh.n_cells
    loc = np.zeros((nc, hd.n_local, hd.n_local))
    for s in range(0, nc, CHUNK):
        cells = np.arange(s, min(s + CHUNK, nc))
        _, w = hd.quadrature(rule, cells)
        _, dpi, _, dgd = broken_tables(hd, rule.points, cells)
        d = dpi if which == "pi" else dgd.reshape(dgd.shape[:3] + (4,))
        loc[cells] = np.einsum("cq,cqia,cqja->cij", w, d, d)
    K = hd.pattern(1).matrix(loc)
    # jumps: |e| * sum_t wt |jump|^2 / |e|, so the edge length cancels
    tr, dofs, wt = _edge_point_tables(hd, which, degree)
    J = np.concatenate([tr[:, 0], -tr[:, 1]], axis=-1)            # (ne, nt, comp, 2 nl)
    dd = np.concatenate([dofs[:, 0], dofs[:, 1]], axis=-1)
    E = np.einsum("t,etci,etcj->eij", wt, J, J)
    I = np.broadcast_to(dd[:, :, None], E.shape)
    Jc = np.broadcast_to(dd[:, None, :], E.shape)
    ok = (I >= 0) & (Jc >= 0)
    P = sp.coo_matrix((E[ok], (I[ok], Jc[ok])), shape=K.shape).tocsr()
    return (K + P).tocsr()


def dg_norm(hd, coeffs, which="pi") -> float:
    c = np.asarray(coeffs.coeffs if hasattr(coeffs, "coeffs") else coeffs, dtype=float).reshape(hd.ndof, -1)
    K = dg_matrix(hd, which)
    return float(np.sqrt(max(np.einsum("ik,ik->", c, K @ c), 0.0)))


def dg_ratio(hd, which="pi", n_samples=100, seed=0) -> float:
    """Largest ``||w||_dG / ||H_D w||`` over random fields."""
    K, G = dg_matrix(hd, which), hd.hess_gram
    V = np.random.default_rng(seed).standard_normal((hd.ndof, n_samples))
    return float(np.sqrt(np.max(np.einsum("ij,ij->j", V, K @ V) / np.einsum("ij,ij->j", V, G @ V))))


# -- a priori bound ----------------------------------------------------------

def load_dual_norm(hd, spec) -> float:
    """``max |L(Pi w)| / ||Pi w||`` over the product space (Euclidean over components)."""
    lu = spd_factor(hd.pi_gram)
    l = assemble_load(hd, spec).reshape(spec.k, hd.ndof)
    return float(np.sqrt(max(sum(li @ lu.solve(li) for li in l), 0.0)))


def stability_bound_check(hd, spec, solution, c_d=None) -> dict:
    """``||Psi||_D <= C_D ||L|| / alpha`` with the exact ``l2`` coercivity constant."""
    lhs = hd_norm(hd, solution)
    if c_d is None:
        c_d = coercivity_constant(hd, n_samples=0)["l2_part"]
    rhs = c_d * load_dual_norm(hd, spec) / spec.coercivity
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs * (1 + 1e-10))}


# -- report ------------------------------------------------------------------

@dataclass
class DiagnosticsReport:
    h: float
    ndof: int
    coercivity_l2: float
    coercivity_l4: float
    w_d: float
    what_d: float
    dg_pi: float
    dg_grad: float
    consistency: float | None = None
    s_max: float | None = None
    p5_max: float | None = None
    stability_lhs: float | None = None
    stability_rhs: float | None = None
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for k, v in asdict(self).items():
            if isinstance(v, float) and not (np.isfinite(v) and v >= 0):
                raise DiagnosticsError(f"{k} = {v} is not a finite non-negative number")

    @property
    def stability_holds(self):
        if self.stability_lhs is None:
            return None
        return self.stability_lhs <= self.stability_rhs * (1 + 1e-10)


COLUMNS = ("h", "ndof", "coercivity_l2", "coercivity_l4", "consistency", "w_d", "what_d",
           "dg_pi", "dg_grad", "s_max", "p5_max", "stability_lhs", "stability_rhs")


def run_diagnostics(hd, case=None, solution=None, spec=None, n_samples=200, seed=0) -> DiagnosticsReport:
    """All measures on one discretisation; ``case``/``solution`` add the optional ones."""
    cd = coercivity_constant(hd, n_samples=n_samples, seed=seed)
    kw = {}
    if case is not None and case.domain == "unit_square":
        kw["consistency"] = consistency_upper(hd, case.exact)
    if hd.element_kind == "gr":
        from .elements import gr_p5_residuals
        gr = hd.element.gr
        kw["s_max"] = float(np.abs(gr.s_child).max())
        kw["p5_max"] = float(gr_p5_residuals(gr).max())
    if solution is not None and spec is not None:
        st = stability_bound_check(hd, spec, solution, cd["l2_part"])
        kw["stability_lhs"], kw["stability_rhs"] = st["lhs"], st["rhs"]
    return DiagnosticsReport(
        h=float(hd.mesh.h), ndof=hd.ndof, coercivity_l2=cd["l2_part"], coercivity_l4=cd["l4_part"],
        w_d=limit_conformity_w(hd), what_d=limit_conformity_what(hd),
        dg_pi=dg_ratio(hd, "pi", seed=seed), dg_grad=dg_ratio(hd, "grad", seed=seed), **kw)


def diagnostics_lines(reports) -> list:
    """CSV block: a header and one row per level; absent values are left empty."""
    lines = [",".join(COLUMNS)]
    for r in reports:
        d = asdict(r)
        cells = []
        for c in COLUMNS:
            v = d[c]
            cells.append("" if v is None else (str(v) if isinstance(v, int) else f"{v:.6g}"))
        lines.append(",".join(cells))
    return lines
