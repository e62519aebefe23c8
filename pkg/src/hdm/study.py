"""Convergence studies: relative errors, observed orders, CSV and config files."""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DiscreteField, build_hd
from .exact import get_case
from .mesh import mesh_sequence
from .quadrature import rule_for, subdivided_rule
from .solver import NewtonConfig, newton_solve

log = logging.getLogger(__name__)

COMPONENT_NAMES = ("u", "v")
DEFAULT_MESH = {
    ("morley", "square"): ("crisscross", 1),
    ("morley", "lshape"): ("diagonal", 2),
    ("gr", "square"): ("diagonal", 4),
    ("gr", "lshape"): ("diagonal", 2),
    ("adini", "square"): ("rectangles", 2),
}
DOMAIN_NAMES = {"square": "unit_square", "lshape": "l_shape"}


class ConfigError(ValueError):
    pass


# -- errors ------------------------------------------------------------------

def corner_cells(mesh, corner=(0.0, 0.0)):
    """Cells having the reentrant corner as a vertex."""
    at = np.flatnonzero(np.all(np.isclose(mesh.vertices, corner, atol=1e-12), axis=1))
    if at.size == 0:
        return np.zeros(0, dtype=int)
    return np.flatnonzero(np.isin(mesh.cells, at).any(axis=1))


def compute_errors(hd, solution, exact, refine_cells=None):
    """Relative L2 errors of ``Pi``, ``grad_D`` and ``H_D`` against the exact bundle.

    ``refine_cells`` get one extra uniform subdivision of the error rule.
    Returns one dict per component with ``err_L2``, ``err_grad``, ``err_hess``
    and the absolute values/exact norms they come from.
    """
    coeffs = solution.coeffs if hasattr(solution, "coeffs") else np.asarray(solution)
    coeffs = np.asarray(coeffs, dtype=float).reshape(hd.ndof, -1)
    nc = hd.mesh.n_cells
    special = np.zeros(nc, dtype=bool)
    if refine_cells is not None and len(refine_cells):
        special[np.asarray(refine_cells)] = True
    k = coeffs.shape[1]
    acc = np.zeros((k, 6))      # |e0|^2, |e1|^2, |e2|^2, |u|^2, |gu|^2, |Hu|^2
    for cells, ref in ((np.flatnonzero(~special), 0), (np.flatnonzero(special), 1)):
        if not len(cells):
            continue
        rule = hd.element.error_rule(ref)
        for s in range(0, len(cells), 2048):
            cc = cells[s:s + 2048]
            xy, w, P, G, H = hd.evaluate(coeffs, rule, cc)
            x, y = xy[..., 0], xy[..., 1]
            for c in range(k):
                f = exact[c]
                u, gu, Hu = f.value(x, y), f.gradient(x, y), f.hessian(x, y)
                acc[c] += [
                    np.sum(w * (P[..., c] - u) ** 2),
                    np.sum(w[..., None] * (G[..., c, :] - gu) ** 2),
                    np.sum(w[..., None, None] * (H[..., c, :, :] - Hu) ** 2),
                    np.sum(w * u ** 2), np.sum(w[..., None] * gu ** 2), np.sum(w[..., None, None] * Hu ** 2),
                ]
    out = []
    for c in range(k):
        e = np.sqrt(acc[c])
        if np.any(e[3:] == 0):
            raise ZeroDivisionError("exact solution has a vanishing norm")
        out.append({"err_L2": e[0] / e[3], "err_grad": e[1] / e[4], "err_hess": e[2] / e[5],
                    "abs_L2": e[0], "abs_grad": e[1], "abs_hess": e[2],
                    "norm_L2": e[3], "norm_grad": e[4], "norm_hess": e[5]})
    return out


def observed_order(errs, hs):
    """``log(e[i-1]/e[i]) / log(h[i-1]/h[i])`` for ``i >= 1``."""
    e = np.asarray(errs, dtype=float)
    h = np.asarray(hs, dtype=float)
    if np.any(e <= 0):
        raise ValueError("errors must be positive")
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))


# -- configuration -----------------------------------------------------------

@dataclass
class StudyConfig:
    problem: str = "ns"
    method: str = "morley"
    domain: str = "square"
    pattern: str = ""
    n0: int = 0
    levels: int = 6
    nu: float = 1.0
    quad_degree: int = 0
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    initial_guess: str = "zero"
    diagnostics: bool = False
    out: str = ""

    def __post_init__(self):
        errors = []
        if self.problem not in ("ns", "vk"):
            errors.append(f"problem must be ns or vk, got {self.problem!r}")
        if self.method not in ("morley", "adini", "gr"):
            errors.append(f"method must be morley, adini or gr, got {self.method!r}")
        if self.domain not in DOMAIN_NAMES:
            errors.append(f"domain must be square or lshape, got {self.domain!r}")
        if self.levels < 2:
            errors.append("levels must be at least 2")
        if self.nu <= 0:
            errors.append("nu must be positive")
        if self.method == "adini" and self.domain != "square":
            errors.append("adini runs on rectangles of the unit square only")
        if self.domain == "lshape" and self.problem != "vk":
            errors.append("the L-shape exact solution is provided for vk only")
        if errors:
            raise ConfigError("; ".join(errors))
        pat, n0 = DEFAULT_MESH[(self.method, self.domain)]
        if not self.pattern:
            self.pattern = pat
        if not self.n0:
            self.n0 = n0
        if (self.method == "adini") != (self.pattern == "rectangles"):
            raise ConfigError("adini needs the rectangles pattern and the other methods need triangles")

    @property
    def case_name(self):
        return f"{self.problem}_{self.domain}"

    @property
    def newton(self):
        return NewtonConfig(self.newton_tol, self.newton_max_iter, self.initial_guess)


_FIELDS = {f.name: f for f in dataclasses.fields(StudyConfig)}


def _parse(name, text):
    typ = _FIELDS[name].type
    if typ in ("bool", bool):
        low = text.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{name}: expected a boolean, got {text!r}")
        return low in ("true", "1", "yes")
    if typ in ("int", int):
        return int(text)
    if typ in ("float", float):
        return float(text)
    return text.strip()


def read_config(path) -> StudyConfig:
    """Flat ``key=value`` file; blank lines and ``#`` comments are ignored."""
    vals, unknown = {}, []
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key=value, got {line!r}")
        key, val = (t.strip() for t in line.split("=", 1))
        if key not in _FIELDS:
            unknown.append(key)
            continue
        vals[key] = _parse(key, val)
    if unknown:
        raise ConfigError("unknown config key(s): " + ", ".join(unknown))
    return StudyConfig(**vals)


def write_config(cfg: StudyConfig, path) -> None:
    lines = [f"{name}={getattr(cfg, name)!r}" if isinstance(getattr(cfg, name), float)
             else f"{name}={getattr(cfg, name)}" for name in _FIELDS]
    Path(path).write_text("\n".join(lines) + "\n")


# -- studies -----------------------------------------------------------------

@dataclass
class ConvergenceReport:
    config: StudyConfig
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def hs(self):
        return [r["h"] for r in self.rows]

    @property
    def nus(self):
        return [r["nu"] for r in self.rows]

    def errors(self, comp=0, kind="err_hess"):
        return [r["errors"][comp][kind] for r in self.rows]

    def orders(self, comp=0, kind="err_hess"):
        return observed_order(self.errors(comp, kind), self.hs)


def prolongate(hd_coarse, coeffs, hd_fine):
    """Canonical interpolant on a red-refined mesh of a coarse reconstruction."""
    mc, mf = hd_coarse.mesh, hd_fine.mesh
    parent = np.arange(mf.n_cells) % mc.n_cells
    el = hd_coarse.element
    c = np.asarray(coeffs, dtype=float).reshape(hd_coarse.ndof, -1)
    cl = hd_coarse.local_coeffs(c)[parent]                 # (nf, nl, k)

    if hd_coarse.element_kind == "gr":
        from .elements.gr import barycentric
        x0 = mc.vertices[mc.cells[parent, 0]]
        J = np.stack([mc.vertices[mc.cells[parent, 1]] - x0, mc.vertices[mc.cells[parent, 2]] - x0], axis=2)
        ref = np.einsum("cij,caj->cai", np.linalg.inv(J), mf.cell_coords - x0[:, None])
        vals = np.zeros((mf.n_cells, 3, c.shape[1]))
        own = el.gr.own_pos[parent]
        for a in range(3):
            lam = barycentric(ref[:, a])
            for b in range(3):
                ok = own[:, b] >= 0
                vals[ok, a] += lam[ok, b, None] * cl[ok, own[ok, b]]
        out = np.zeros((hd_fine.ndof, c.shape[1]))
        vd = hd_fine.element.gr.vertex_dof[mf.cells]
        for a in range(3):
            ok = vd[:, a] >= 0
            out[vd[ok, a]] = vals[ok, a]
        return out

    local = el.local
    sub = type(local)(*(getattr(local, f.name)[parent] for f in dataclasses.fields(local)))
    pts = []
    fe = hd_fine.element
    if hd_coarse.element_kind == "morley":
        from .elements.morley import _EDGE_VERTS
        xv = mf.cell_coords
        mids = 0.5 * (xv[:, _EDGE_VERTS[:, 0]] + xv[:, _EDGE_VERTS[:, 1]])
        v, _, _ = sub.evaluate(xv)
        _, g, _ = sub.evaluate(mids)
        nrm = mf.edge_normals[mf.cell_edges]
        dofs = np.concatenate([np.einsum("cql,clk->cqk", v, cl),
                               np.einsum("cqld,clk,cqd->cqk", g, cl, nrm)], axis=1)
    else:
        v, g, _ = sub.evaluate(mf.cell_coords)
        vals = np.einsum("cql,clk->cqk", v, cl)
        grads = np.einsum("cqld,clk->cqdk", g, cl)
        dofs = np.concatenate([vals[:, :, None, :], grads], axis=2).reshape(mf.n_cells, 12, -1)
    cd = fe.cell_dofs
    ok = cd >= 0
    out = np.zeros((hd_fine.ndof, c.shape[1]))
    cnt = np.bincount(cd[ok], minlength=hd_fine.ndof)
    for j in range(c.shape[1]):
        out[:, j] = np.bincount(cd[ok], weights=dofs[..., j][ok], minlength=hd_fine.ndof)
    return out / np.maximum(cnt, 1)[:, None]


def run_convergence_study(cfg: StudyConfig, progress=None) -> ConvergenceReport:
    """Red-refined mesh sequence, Newton solve on each level, errors and orders."""
    case = get_case(cfg.case_name, cfg.nu)
    spec = case.problem_spec()
    meshes = mesh_sequence(DOMAIN_NAMES[cfg.domain], cfg.pattern, cfg.n0, cfg.levels)
    report = ConvergenceReport(cfg, metadata={"case": case.name, "newton_tol": cfg.newton_tol,
                                              "newton_max_iter": cfg.newton_max_iter,
                                              "initial_guess": cfg.initial_guess, "levels": []})
    prev = None
    for lev, m in enumerate(meshes):
        t0 = time.perf_counter()
        rule = None
        if cfg.quad_degree:
            rule = (subdivided_rule("tri3", cfg.quad_degree, 1) if cfg.method == "gr"
                    else rule_for(m.cell_kind, cfg.quad_degree))
        hd = build_hd(m, cfg.method, rule)
        init = None
        if cfg.initial_guess == "coarse_level_interpolation" and prev is not None:
            init = prolongate(prev[0], prev[1].coeffs, hd)
        try:
            sol = newton_solve(hd, spec, cfg.newton, initial=init, level=lev)
        except Exception as exc:
            exc.args = (f"level {lev} (h={m.h:.6g}): {exc}",) + exc.args[1:]
            raise
        refine = corner_cells(m) if cfg.domain == "lshape" else None
        errs = compute_errors(hd, sol, case.exact, refine)
        dt = time.perf_counter() - t0
        report.rows.append({"h": m.h, "nu": hd.ndof, "errors": errs})
        report.metadata["levels"].append({"level": lev, "newton_trace": sol.trace,
                                          "iterations": sol.iterations, "seconds": dt})
        if cfg.diagnostics:
            from .diagnostics import run_diagnostics
            report.diagnostics.append(run_diagnostics(hd, case=case, solution=sol, spec=spec))
        if progress is not None:
            progress(lev, m.h, hd.ndof, errs, dt)
        log.debug("level %d h=%.6f nu=%d done in %.2fs", lev, m.h, hd.ndof, dt)
        prev = (hd, sol)
    return report


# -- CSV ---------------------------------------------------------------------

_KINDS = (("err_L2", ""), ("err_grad", "grad_"), ("err_hess", "hess_"))


def csv_header(k):
    cols = ["h", "nu"]
    for c in range(k):
        n = COMPONENT_NAMES[c]
        for _, pre in _KINDS:
            cols += [f"err_{pre}{n}", f"ord_{pre}{n}"]
    return cols


def report_lines(report: ConvergenceReport):
    k = len(report.rows[0]["errors"])
    lines = [",".join(csv_header(k))]
    orders = {(c, kind): report.orders(c, kind) for c in range(k) for kind, _ in _KINDS}
    for i, row in enumerate(report.rows):
        cells = [f"{row['h']:.6g}", str(row["nu"])]
        for c in range(k):
            for kind, _ in _KINDS:
                cells.append(f"{row['errors'][c][kind]:.6g}")
                cells.append("-" if i == 0 else f"{orders[(c, kind)][i - 1]:.4f}")
        lines.append(",".join(cells))
    return lines


def write_csv(report: ConvergenceReport, path) -> None:
    lines = report_lines(report)
    if report.diagnostics:
        from .diagnostics import diagnostics_lines
        lines += [""] + diagnostics_lines(report.diagnostics)
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Rows of the error table (diagnostics block ignored) as dicts of strings."""
    text = Path(path).read_text().split("\n\n", 1)[0].strip().splitlines()
    head = text[0].split(",")
    return [dict(zip(head, line.split(","))) for line in text[1:]]
