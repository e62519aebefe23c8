"""Assembly and solution of the Hessian scheme.

Residual entry for test function ``Phi`` (component ``c``, basis ``i``):
``A(H psi, H Phi) + B(H psi, grad psi, grad Phi) - L(Pi Phi)``.  Unknowns use
the block layout ``c * ndof + i``.  Sums into global arrays go through a
fixed scatter map (``np.bincount``), so repeated runs are bit-identical.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import DiscreteField, HessianDiscretisation
from .quadrature import rule_for

log = logging.getLogger(__name__)

CHUNK = 2048
LOAD_DEGREE = 12


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


class FactorisationError(SolverError):
    pass


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 30
    initial_guess: str = "zero"       # or "coarse_level_interpolation"
    damping: bool = False             # bisection fallback is always available on residual increase

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.initial_guess not in ("zero", "coarse_level_interpolation"):
            raise ValueError(f"unknown initial guess policy {self.initial_guess!r}")


@dataclass(eq=False)
class DiscreteSolution:
    field: DiscreteField
    method: str
    level: int | None = None
    trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    metadata: dict = field(default_factory=dict)

    @property
    def coeffs(self):
        return self.field.coeffs


def _as_coeffs(hd, fld, k):
    if isinstance(fld, DiscreteField):
        return fld.coeffs
    c = np.asarray(fld, dtype=float)
    return c.reshape(k, hd.ndof).T if c.ndim == 1 else c


def _chunks(n, size=CHUNK):
    for s in range(0, n, size):
        yield slice(s, min(s + size, n))


def assemble_load(hd: HessianDiscretisation, spec) -> np.ndarray:
    """``L(Pi Phi)`` for every basis function, with a degree-12 rule."""
    key = ("load", id(spec))
    if key in hd._cache:
        return hd._cache[key][1]
    kind = hd.mesh.cell_kind
    rule = rule_for(kind, LOAD_DEGREE)
    k = spec.k
    loc = np.zeros((hd.mesh.n_cells, k, hd.n_local))
    for sl in _chunks(hd.mesh.n_cells):
        cells = np.arange(hd.mesh.n_cells)[sl]
        xy, w = hd.quadrature(rule, cells)
        pi, _, _ = hd.element.tables(rule.points, cells)
        f = spec.load(xy[..., 0], xy[..., 1])           # (nc, nq, k)
        loc[sl] = np.einsum("cq,cqk,cql->ckl", w, f, pi)
    vec = hd.pattern(k).vector(loc.reshape(hd.mesh.n_cells, -1))
    hd._cache[key] = (spec, vec)       # keep spec alive so its id stays unique
    return vec


def _state(hd, c, sl):
    _, w, pi, grad, hess = hd.tables
    cl = hd.local_coeffs(c, np.arange(hd.mesh.n_cells)[sl])
    G = np.einsum("cqld,clk->cqkd", grad[sl], cl)
    H = np.einsum("cqlrs,clk->cqkrs", hess[sl], cl)
    return w[sl], grad[sl], hess[sl], G, H


def assemble_operator_residual(hd, spec, fld) -> np.ndarray:
    """``A(H psi, H Phi) + B(H psi, grad psi, grad Phi)`` for every test ``Phi``."""
    k = spec.k
    c = _as_coeffs(hd, fld, k)
    nc = hd.mesh.n_cells
    loc = np.zeros((nc, k, hd.n_local))
    for sl in _chunks(nc):
        w, grad, hess, G, H = _state(hd, c, sl)
        sig = spec.a_flux(H)
        tau = spec.b_flux(H, G)
        loc[sl] = np.einsum("cq,cqkrs,cqlrs->ckl", w, sig, hess) + np.einsum("cq,cqkd,cqld->ckl", w, tau, grad)
    return hd.pattern(k).vector(loc.reshape(nc, -1))


def assemble_residual(hd, spec, fld) -> np.ndarray:
    return assemble_operator_residual(hd, spec, fld) - assemble_load(hd, spec)


def assemble_jacobian(hd, spec, fld=None, frozen_only=False) -> sp.csr_matrix:
    """Derivative of the residual at ``fld``.

    With ``frozen_only`` the term ``B(H delta, grad psi, grad Phi)`` is left
    out, which gives the linearised (Picard) operator with the Hessian slot
    of ``B`` frozen at ``fld``.
    """
    k = spec.k
    nc, nl = hd.mesh.n_cells, hd.n_local
    c = np.zeros((hd.ndof, k)) if fld is None else _as_coeffs(hd, fld, k)
    loc = np.zeros((nc, k, nl, k, nl))
    for sl in _chunks(nc):
        w, grad, hess, G, H = _state(hd, c, sl)
        ncs, nq = w.shape
        # weighted test tables as (cell, test, q*entries) for batched matmul
        Th = (w[:, :, None, None, None] * hess).transpose(0, 2, 1, 3, 4).reshape(ncs, nl, nq * 4)
        Tg = (w[:, :, None, None] * grad).transpose(0, 2, 1, 3).reshape(ncs, nl, nq * 2)
        for ct in range(k):
            Ht = np.zeros((ncs, nq, nl, k, 2, 2))
            Ht[..., ct, :, :] = hess
            Gt = np.zeros((ncs, nq, nl, k, 2))
            Gt[..., ct, :] = grad
            sig = spec.a_flux(Ht)                                   # (c, q, m, k, 2, 2)
            tau = spec.b_flux(H[:, :, None], Gt)                    # H frozen, gradient varies
            if not frozen_only:
                tau = tau + spec.b_flux(Ht, G[:, :, None])
            sig = sig.transpose(0, 3, 1, 4, 5, 2).reshape(ncs, k, nq * 4, nl)
            tau = tau.transpose(0, 3, 1, 4, 2).reshape(ncs, k, nq * 2, nl)
            loc[sl, :, :, ct, :] = Th[:, None] @ sig + Tg[:, None] @ tau
    return hd.pattern(k).matrix(loc.reshape(nc, k * nl, k * nl))


def linear_solve(A, b, refine: int = 2) -> np.ndarray:
    """Sparse LU solve with a backward-error check and iterative refinement."""
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise FactorisationError(f"factorisation failed: {exc}") from exc
    diag = np.abs(lu.U.diagonal())
    if diag.size and diag.min() <= 1e-14 * diag.max():
        raise FactorisationError(f"near-singular matrix: pivot ratio {diag.min() / diag.max():.3e}")
    x = lu.solve(b)
    normA = sp.linalg.norm(A, np.inf)
    for _ in range(refine):
        r = b - A @ x
        if np.linalg.norm(r, np.inf) <= 1e-15 * (normA * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)):
            break
        x = x + lu.solve(r)
    if not np.all(np.isfinite(x)):
        raise FactorisationError("non-finite solution")
    return x


def roundoff_floor(J, x, load) -> float:
    """``eps * || |J| |x| + |L| ||``: the residual norm reachable in double precision."""
    return float(np.finfo(float).eps * np.linalg.norm(abs(J) @ np.abs(x) + np.abs(load)))


def newton_solve(hd, spec, config: NewtonConfig | None = None, initial=None, level=None) -> DiscreteSolution:
    """Newton iteration on the assembled residual; each linear solve counts as one iteration.

    Stops when the residual norm is at most ``config.tol``, or at most the
    round-off floor of the current Jacobian when that is larger (only on very
    fine meshes).  ``metadata["below_tol"]`` tells the two apart.
    """
    cfg = config or NewtonConfig()
    k = spec.k
    x = np.zeros(k * hd.ndof) if initial is None else DiscreteField(hd, _as_coeffs(hd, initial, k)).flat
    load = assemble_load(hd, spec)

    def resid(v):
        return assemble_operator_residual(hd, spec, v) - load

    r = resid(x)
    rn = float(np.linalg.norm(r))
    trace = [rn]
    it = 0
    floor = 0.0
    while rn > max(cfg.tol, floor):
        if it >= cfg.max_iter:
            raise ConvergenceError(f"Newton did not converge in {cfg.max_iter} iterations "
                                   f"(residual {rn:.3e}, round-off floor {floor:.3e})", trace)
        J = assemble_jacobian(hd, spec, x)
        # size of the terms summed into the residual: below eps times this, the
        # residual is rounding noise and no Newton step can reduce it
        floor = roundoff_floor(J, x, load)
        dx = linear_solve(J, -r)
        it += 1
        step = 1.0
        xn = x + dx
        rv = resid(xn)
        rn_new = float(np.linalg.norm(rv))
        # bisection fallback on residual increase (Armijo-type decrease with damping=True)
        while step > 1.0 / 1024 and (rn_new > rn or (cfg.damping and rn_new > (1 - 1e-4 * step) * rn)):
            step *= 0.5
            xn = x + step * dx
            rv = resid(xn)
            rn_new = float(np.linalg.norm(rv))
        x, r, rn = xn, rv, rn_new
        trace.append(rn)
        log.debug("newton %d: |r| = %.3e (step %.3g)", it, rn, step)
    fld = DiscreteField.from_flat(hd, x, k)
    return DiscreteSolution(fld, hd.element_kind, level, trace, it, True,
                            {"tol": cfg.tol, "max_iter": cfg.max_iter, "residual": rn,
                             "roundoff_floor": floor, "below_tol": rn <= cfg.tol})


def picard_step(hd, spec, frozen) -> DiscreteField:
    """Solve ``A(H Psi, H Phi) + B(H frozen, grad Psi, grad Phi) = L(Pi Phi)``."""
    k = spec.k
    J = assemble_jacobian(hd, spec, frozen, frozen_only=True)
    x = linear_solve(J, assemble_load(hd, spec))
    return DiscreteField.from_flat(hd, x, k)


def picard_iterate(hd, spec, tol=1e-12, max_iter=200, callback=None):
    """Fixed-point iteration of the Picard map from zero; returns ``(field, increments)``."""
    cur = DiscreteField.zeros(hd, spec.k)
    incs = []
    for _ in range(max_iter):
        nxt = picard_step(hd, spec, cur)
        if callback is not None:
            callback(nxt)
        d = float(np.abs(nxt.coeffs - cur.coeffs).max())
        incs.append(d)
        cur = nxt
        if d <= tol:
            break
    return cur, incs
