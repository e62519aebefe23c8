"""Hessian discretisations: the quadruplet (X_D0, Pi_D, grad_D, H_D) over a mesh.

Every method exposes the same per-cell tables: for each cell, quadrature
point and local basis function, the reconstructed value, gradient (2,) and
Hessian (2, 2).  Local basis functions map to global DOFs through
``cell_dofs``; ``-1`` marks a constrained (clamped) DOF whose coefficient is
zero.  Assembly, errors and diagnostics are written once on top of this.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import sympy

from .elements import ELEMENTS
from .quadrature import QuadRule, affine_map

CHUNK = 4096


# -- smooth functions --------------------------------------------------------

def _broadcast(f):
    def g(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), np.broadcast(x, y).shape).copy()
    return g


class SmoothFunction:
    """Scalar function of (x, y) with derivatives of any order.

    Built from a sympy expression; derivatives are differentiated symbolically
    on first use and compiled with ``lambdify``.  ``modules`` is forwarded to
    ``lambdify`` (used to pick the angular branch on the L-shape).
    """

    X, Y = sympy.symbols("x y", real=True)

    def __init__(self, expr, modules=("numpy",), name=""):
        self.expr = sympy.sympify(expr)
        self.modules = list(modules)
        self.name = name
        self._cache: dict = {}

    def derivative(self, i: int, j: int) -> Callable:
        """Callable for d^{i+j} / dx^i dy^j."""
        key = (i, j)
        if key not in self._cache:
            e = self.expr
            if i:
                e = sympy.diff(e, self.X, i)
            if j:
                e = sympy.diff(e, self.Y, j)
            self._cache[key] = _broadcast(sympy.lambdify((self.X, self.Y), e, modules=self.modules, cse=True))
        return self._cache[key]

    def value(self, x, y):
        return self.derivative(0, 0)(x, y)

    def gradient(self, x, y):
        return np.stack([self.derivative(1, 0)(x, y), self.derivative(0, 1)(x, y)], axis=-1)

    def hessian(self, x, y):
        xx, xy, yy = self.derivative(2, 0)(x, y), self.derivative(1, 1)(x, y), self.derivative(0, 2)(x, y)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    def laplacian(self, x, y):
        return self.derivative(2, 0)(x, y) + self.derivative(0, 2)(x, y)

    def bilaplacian(self, x, y):
        d = self.derivative
        return d(4, 0)(x, y) + 2 * d(2, 2)(x, y) + d(0, 4)(x, y)


@dataclass
class ExactFunctionBundle:
    """Per-component smooth functions (value, gradient, Hessian callables)."""
    components: Sequence

    @property
    def k(self) -> int:
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]


# -- sparse scatter ----------------------------------------------------------

@dataclass(eq=False)
class ScatterPattern:
    """CSR pattern of the union of cell cliques, with a deterministic scatter map."""
    shape: tuple
    indptr: np.ndarray
    indices: np.ndarray
    local_dofs: np.ndarray      # (nc, m) global rows per local slot, -1 if constrained
    mat_valid: np.ndarray       # flat mask over (nc, m, m)
    mat_map: np.ndarray         # CSR data position of every valid local entry
    vec_valid: np.ndarray
    vec_map: np.ndarray

    def matrix(self, local):
        """Sum local matrices ``(nc, m, m)`` into a CSR matrix."""
        data = np.bincount(self.mat_map, weights=local.reshape(-1)[self.mat_valid], minlength=len(self.indices))
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)

    def vector(self, local):
        """Sum local vectors ``(nc, m)`` into a global vector."""
        return np.bincount(self.vec_map, weights=local.reshape(-1)[self.vec_valid], minlength=self.shape[0])


def _build_pattern(local_dofs, n):
    I = np.broadcast_to(local_dofs[:, :, None], local_dofs.shape + local_dofs.shape[1:])
    J = np.broadcast_to(local_dofs[:, None, :], I.shape)
    valid = ((I >= 0) & (J >= 0)).reshape(-1)
    keys = I.reshape(-1)[valid].astype(np.int64) * n + J.reshape(-1)[valid]
    uniq, inv = np.unique(keys, return_inverse=True)
    rows = uniq // n
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
    vvalid = (local_dofs >= 0).reshape(-1)
    return ScatterPattern((n, n), indptr, (uniq % n).astype(np.int64), local_dofs, valid,
                          inv.reshape(-1), vvalid, local_dofs.reshape(-1)[vvalid])


# -- the discretisation ------------------------------------------------------

@dataclass(eq=False)
class HessianDiscretisation:
    mesh: object
    element_kind: str
    element: object
    rule: QuadRule
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def ndof(self) -> int:
        return self.element.ndof

    @property
    def cell_dofs(self) -> np.ndarray:
        return self.element.cell_dofs

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]

    def quadrature(self, rule=None, cells=None):
        rule = self.rule if rule is None else rule
        xy, det = affine_map(self.mesh, rule.points, cells)
        return xy, det[:, None] * rule.weights[None, :]

    @property
    def tables(self):
        """``(xy, w, pi, grad, hess)`` at the default rule, cached."""
        if "tables" not in self._cache:
            xy, w = self.quadrature()
            self._cache["tables"] = (xy, w) + tuple(self.element.tables(self.rule.points))
        return self._cache["tables"]

    def pattern(self, k: int = 1) -> ScatterPattern:
        key = ("pattern", k)
        if key not in self._cache:
            cd = self.cell_dofs
            ld = np.concatenate([np.where(cd >= 0, cd + c * self.ndof, -1) for c in range(k)], axis=1)
            self._cache[key] = _build_pattern(ld, k * self.ndof)
        return self._cache[key]

    def local_coeffs(self, coeffs, cells=None):
        """Gather ``(ndof, k)`` coefficients to ``(nc, nl, k)`` with zeros on constrained slots."""
        cd = self.cell_dofs if cells is None else self.cell_dofs[cells]
        c = np.asarray(coeffs, dtype=float).reshape(self.ndof, -1)
        out = c[np.maximum(cd, 0)]
        out[cd < 0] = 0.0
        return out

    def evaluate(self, coeffs, rule=None, cells=None, chunk=CHUNK):
        """Reconstructions of a ``(ndof, k)`` coefficient array at a quadrature rule.

        Returns ``xy (nc, nq, 2)``, ``w (nc, nq)``, ``P (nc, nq, k)``,
        ``G (nc, nq, k, 2)`` and ``H (nc, nq, k, 2, 2)``.
        """
        c = np.asarray(coeffs, dtype=float).reshape(self.ndof, -1)
        if rule is None and cells is None:
            xy, w, pi, grad, hess = self.tables
            cl = self.local_coeffs(c)
            return (xy, w, np.einsum("cql,clk->cqk", pi, cl), np.einsum("cqld,clk->cqkd", grad, cl),
                    np.einsum("cqlrs,clk->cqkrs", hess, cl))
        rule = self.rule if rule is None else rule
        cells = np.arange(self.mesh.n_cells) if cells is None else np.asarray(cells)
        parts = []
        for s in range(0, len(cells), chunk):
            cc = cells[s:s + chunk]
            xy, w = self.quadrature(rule, cc)
            pi, grad, hess = self.element.tables(rule.points, cc)
            cl = self.local_coeffs(c, cc)
            parts.append((xy, w, np.einsum("cql,clk->cqk", pi, cl), np.einsum("cqld,clk->cqkd", grad, cl),
                          np.einsum("cqlrs,clk->cqkrs", hess, cl)))
        if not parts:
            nq, k = len(rule.weights), c.shape[1]
            return (np.zeros((0, nq, 2)), np.zeros((0, nq)), np.zeros((0, nq, k)),
                    np.zeros((0, nq, k, 2)), np.zeros((0, nq, k, 2, 2)))
        return tuple(np.concatenate(p) for p in zip(*parts))

    # -- Gram matrices (scalar, one component) --------------------------------
    def _gram(self, name):
        key = ("gram", name)
        if key not in self._cache:
            _, w, pi, grad, hess = self.tables
            t = {"pi": pi[..., None], "grad": grad, "hess": hess.reshape(hess.shape[:3] + (4,))}[name]
            loc = np.einsum("cq,cqia,cqja->cij", w, t, t)
            self._cache[key] = self.pattern(1).matrix(loc)
        return self._cache[key]

    @property
    def pi_gram(self):
        return self._gram("pi")

    @property
    def grad_gram(self):
        return self._gram("grad")

    @property
    def hess_gram(self):
        return self._gram("hess")


def build_hd(mesh, element_kind: str, rule: QuadRule | None = None) -> HessianDiscretisation:
    """Hessian discretisation of the given kind on ``mesh``.

    ``morley`` and ``gr`` need triangles, ``adini`` needs rectangles.
    """
    if element_kind not in ELEMENTS:
        raise ValueError(f"unknown element {element_kind!r}; choose from {sorted(ELEMENTS)}")
    need = "quad4" if element_kind == "adini" else "tri3"
    if mesh.cell_kind != need:
        raise ValueError(f"{element_kind} needs a {need} mesh, got {mesh.cell_kind}")
    el = ELEMENTS[element_kind](mesh)
    return HessianDiscretisation(mesh, element_kind, el, el.rule if rule is None else rule)


# -- fields ------------------------------------------------------------------

@dataclass(eq=False)
class DiscreteField:
    """Coefficients of ``k`` components in ``X_D0``, stored as ``(ndof, k)``."""
    hd: HessianDiscretisation
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != self.hd.ndof:
            raise ValueError(f"expected {self.hd.ndof} coefficients per component, got {c.shape[0]}")
        self.coeffs = c

    @property
    def k(self) -> int:
        return self.coeffs.shape[1]

    @property
    def flat(self) -> np.ndarray:
        """Block layout: component ``c`` occupies ``[c*ndof, (c+1)*ndof)``."""
        return self.coeffs.T.reshape(-1).copy()

    @classmethod
    def from_flat(cls, hd, vec, k):
        return cls(hd, np.asarray(vec, dtype=float).reshape(k, hd.ndof).T)

    @classmethod
    def zeros(cls, hd, k=1):
        return cls(hd, np.zeros((hd.ndof, k)))


def reconstruct(hd: HessianDiscretisation, fld: DiscreteField, cell=None, rule=None):
    """``(Pi, grad, H)`` per quadrature point of ``cell`` (all cells when ``None``)."""
    cells = None if cell is None else np.atleast_1d(cell)
    _, _, P, G, H = hd.evaluate(fld.coeffs, rule, cells)
    return P, G, H


def interpolate(hd: HessianDiscretisation, exact) -> DiscreteField:
    """Canonical interpolant: the element DOFs applied to each exact component."""
    comps = exact.components if isinstance(exact, ExactFunctionBundle) else [exact]
    cols = [hd.element.interpolate(f.value, f.gradient) for f in comps]
    return DiscreteField(hd, np.stack(cols, axis=1))


def hd_norm(hd: HessianDiscretisation, fld) -> float:
    """L2 norm of ``H_D`` (Frobenius per point, root-sum-square over components)."""
    c = np.asarray(fld.coeffs if hasattr(fld, "coeffs") else fld, dtype=float).reshape(hd.ndof, -1)
    G = hd.hess_gram
    return float(np.sqrt(max(sum(c[:, j] @ (G @ c[:, j]) for j in range(c.shape[1])), 0.0)))
