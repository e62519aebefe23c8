"""Structured conforming meshes of the unit square and the L-shaped domain.

Meshes are immutable containers of vertices, cells and edge connectivity.
Triangular meshes come in two patterns (``diagonal`` and ``crisscross``),
rectangular meshes in one (``rectangles``).  ``red_refine`` splits every cell
into four similar children.

Conventions
-----------
* cells are stored counter-clockwise;
* the local edge ``i`` of a triangle is the edge opposite to vertex ``i``,
  the local edge ``i`` of a rectangle joins vertices ``i`` and ``i + 1``;
* every edge carries one fixed unit normal, oriented from the incident cell
  with the lower index towards the other one (outward on the boundary).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DOMAINS = ("unit_square", "l_shape")
PATTERNS = ("diagonal", "crisscross", "rectangles")


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    cells: np.ndarray
    cell_kind: str
    edges: np.ndarray
    edge_cells: np.ndarray
    cell_edges: np.ndarray
    edge_valence: np.ndarray
    domain: str = "unit_square"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_cells(cls, vertices, cells, cell_kind, domain="unit_square"):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        nv_cell = {"tri3": 3, "quad4": 4}[cell_kind]
        if cells.ndim != 2 or cells.shape[1] != nv_cell:
            raise MeshError(f"{cell_kind} cells need {nv_cell} vertices each")
        if cell_kind == "tri3":
            # local edge i is opposite to vertex i
            loc = [(1, 2), (2, 0), (0, 1)]
        else:
            loc = [(0, 1), (1, 2), (2, 3), (3, 0)]
        pairs = np.stack([cells[:, list(p)] for p in loc], axis=1)
        pairs = np.sort(pairs, axis=2).reshape(-1, 2)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        cell_edges = inverse.reshape(len(cells), nv_cell)
        valence = np.bincount(inverse, minlength=len(edges))

        owner = np.repeat(np.arange(len(cells)), nv_cell)
        order = np.lexsort((owner, inverse))
        sorted_edges = inverse[order]
        sorted_cells = owner[order]
        first = np.searchsorted(sorted_edges, np.arange(len(edges)))
        edge_cells = np.full((len(edges), 2), -1, dtype=np.int64)
        edge_cells[:, 0] = sorted_cells[first]
        has_second = valence >= 2
        edge_cells[has_second, 1] = sorted_cells[first[has_second] + 1]

        return cls(vertices, cells, cell_kind, edges, edge_cells, cell_edges,
                   valence, domain)

    # -- geometry ----------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def cell_coords(self) -> np.ndarray:
        return self.vertices[self.cells]

    @property
    def signed_areas(self) -> np.ndarray:
        """Shoelace areas; positive for counter-clockwise cells."""
        x = self.cell_coords
        xn = np.roll(x, -1, axis=1)
        return 0.5 * np.sum(x[..., 0] * xn[..., 1] - xn[..., 0] * x[..., 1], axis=1)

    @property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @property
    def centroids(self) -> np.ndarray:
        return self.cell_coords.mean(axis=1)

    @property
    def diameters(self) -> np.ndarray:
        x = self.cell_coords
        d = np.linalg.norm(x[:, :, None, :] - x[:, None, :, :], axis=-1)
        return d.max(axis=(1, 2))

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def inradii(self) -> np.ndarray:
        if self.cell_kind == "tri3":
            x = self.cell_coords
            perim = np.linalg.norm(x - np.roll(x, -1, axis=1), axis=-1).sum(axis=1)
            return 2.0 * self.areas / perim
        x = self.cell_coords
        sides = np.linalg.norm(x - np.roll(x, -1, axis=1), axis=-1)
        return 0.5 * sides.min(axis=1)

    @property
    def shape_ratios(self) -> np.ndarray:
        return self.diameters / self.inradii

    @property
    def edge_boundary(self) -> np.ndarray:
        return self.edge_valence == 1

    @property
    def vertex_boundary(self) -> np.ndarray:
        if "vertex_boundary" not in self._cache:
            flags = np.zeros(self.n_vertices, dtype=bool)
            flags[self.edges[self.edge_boundary].ravel()] = True
            self._cache["vertex_boundary"] = flags
        return self._cache["vertex_boundary"]

    @property
    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]], axis=1)

    @property
    def edge_normals(self) -> np.ndarray:
        if "edge_normals" not in self._cache:
            t = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
            n = np.stack([t[:, 1], -t[:, 0]], axis=1) / np.linalg.norm(t, axis=1)[:, None]
            away = self.edge_midpoints - self.centroids[self.edge_cells[:, 0]]
            flip = np.sum(n * away, axis=1) < 0
            n[flip] *= -1
            n.setflags(write=False)
            self._cache["edge_normals"] = n
        return self._cache["edge_normals"]


# -- construction -----------------------------------------------------------

def _grid_squares(domain: str, n: int):
    """Lower-left corners (integer grid units) of the squares covering the domain."""
    if domain == "unit_square":
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return np.stack([i.ravel(), j.ravel()], axis=1), (0.0, 0.0)
    # (-1, 1)^2 minus [0, 1) x (-1, 0]
    i, j = np.meshgrid(np.arange(2 * n), np.arange(2 * n), indexing="ij")
    keep = ~((i >= n) & (j < n))
    return np.stack([i[keep], j[keep]], axis=1), (-1.0, -1.0)


def build_structured_mesh(domain: str, pattern: str, n: int) -> Mesh:
    """Uniform mesh with ``n`` grid squares per unit length.

    ``diagonal`` cuts each square along its bottom-left to top-right
    diagonal, ``crisscross`` along both diagonals, ``rectangles`` keeps the
    squares as cells.
    """
    if domain not in DOMAINS:
        raise MeshError(f"unknown domain {domain!r}")
    if pattern not in PATTERNS:
        raise MeshError(f"unknown pattern {pattern!r}")
    if int(n) != n or n < 1:
        raise MeshError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    squares, origin = _grid_squares(domain, n)
    side = 1.0 / n

    corners = np.stack([squares, squares + [1, 0], squares + [1, 1], squares + [0, 1]], axis=1)
    keys, inv = np.unique(corners.reshape(-1, 2), axis=0, return_inverse=True)
    quad = inv.reshape(-1, 4)
    vertices = np.asarray(origin) + keys * side

    if pattern == "rectangles":
        cells, kind = quad, "quad4"
    elif pattern == "diagonal":
        cells = np.concatenate([quad[:, [0, 1, 2]], quad[:, [0, 2, 3]]])
        kind = "tri3"
    else:
        centres = np.arange(len(quad)) + len(vertices)
        vertices = np.vstack([vertices, vertices[quad].mean(axis=1)])
        c = centres[:, None]
        cells = np.concatenate([
            np.hstack([quad[:, [0, 1]], c]), np.hstack([quad[:, [1, 2]], c]),
            np.hstack([quad[:, [2, 3]], c]), np.hstack([quad[:, [3, 0]], c]),
        ])
        kind = "tri3"
    return Mesh.from_cells(vertices, cells, kind, domain)


def red_refine(m: Mesh) -> Mesh:
    """Split each cell into four by joining edge midpoints (and the centre for rectangles)."""
    nv, ne = m.n_vertices, m.n_edges
    mids = nv + m.cell_edges
    vertices = [m.vertices, m.edge_midpoints]
    c = m.cells
    if m.cell_kind == "tri3":
        ma, mb, mc = mids[:, 0], mids[:, 1], mids[:, 2]
        children = np.concatenate([
            np.stack([c[:, 0], mc, mb], axis=1),
            np.stack([mc, c[:, 1], ma], axis=1),
            np.stack([mb, ma, c[:, 2]], axis=1),
            np.stack([ma, mb, mc], axis=1),
        ])
    else:
        ctr = nv + ne + np.arange(m.n_cells)
        vertices.append(m.centroids)
        e0, e1, e2, e3 = mids.T
        children = np.concatenate([
            np.stack([c[:, 0], e0, ctr, e3], axis=1),
            np.stack([e0, c[:, 1], e1, ctr], axis=1),
            np.stack([ctr, e1, c[:, 2], e2], axis=1),
            np.stack([e3, ctr, e2, c[:, 3]], axis=1),
        ])
    return Mesh.from_cells(np.vstack(vertices), children, m.cell_kind, m.domain)


def mesh_sequence(domain: str, pattern: str, n0: int, levels: int) -> list[Mesh]:
    """Coarse structured mesh followed by ``levels - 1`` red refinements."""
    meshes = [build_structured_mesh(domain, pattern, n0)]
    for _ in range(levels - 1):
        meshes.append(red_refine(meshes[-1]))
    return meshes


# -- inspection -------------------------------------------------------------

def mesh_stats(m: Mesh) -> dict:
    interior_v = int(np.count_nonzero(~m.vertex_boundary))
    boundary_e = int(np.count_nonzero(m.edge_boundary))
    return {
        "h": m.h,
        "n_cells": m.n_cells,
        "n_vertices": m.n_vertices,
        "n_edges": m.n_edges,
        "n_interior_vertices": interior_v,
        "n_interior_edges": m.n_edges - boundary_e,
        "n_boundary_edges": boundary_e,
        "euler": m.n_vertices - m.n_edges + m.n_cells,
    }


def validate_mesh(m: Mesh) -> list[str]:
    """Return a description of every violated invariant; empty when valid."""
    problems = []
    for val in np.unique(m.edge_valence[m.edge_valence > 2]):
        cnt = int(np.count_nonzero(m.edge_valence == val))
        problems.append(f"edge with {val} incident cells ({cnt} edges)")
    bad = np.flatnonzero(m.signed_areas <= 0)
    if bad.size:
        problems.append(f"negative area in {bad.size} cells (first: {bad[0]})")
    if np.unique(np.sort(m.cells, axis=1), axis=0).shape[0] != m.n_cells:
        problems.append("duplicated cell")
    # boundary edges must close up: every boundary vertex meets an even number of them
    deg = np.bincount(m.edges[m.edge_boundary].ravel(), minlength=m.n_vertices)
    if np.any(deg % 2):
        problems.append("open boundary loop")
    if not np.isclose(m.h, m.diameters.max()):
        problems.append("h does not match cell diameters")
    return problems


def dump_mesh(m: Mesh, path) -> None:
    lines = [f"v {x!r} {y!r}" for x, y in m.vertices.tolist()]
    lines += ["c " + " ".join(map(str, c)) for c in m.cells.tolist()]
    lines += [f"e {i} {j} {int(b)}" for (i, j), b in zip(m.edges.tolist(), m.edge_boundary.tolist())]
    Path(path).write_text(f"# {m.cell_kind} {m.domain}\n" + "\n".join(lines) + "\n")


def load_mesh(path) -> Mesh:
    verts, cells = [], []
    kind, domain = None, "unit_square"
    for line in Path(path).read_text().splitlines():
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "#":
            kind, domain = tok[1], tok[2]
        elif tok[0] == "v":
            verts.append((float(tok[1]), float(tok[2])))
        elif tok[0] == "c":
            cells.append([int(t) for t in tok[1:]])
    if kind is None:
        kind = "tri3" if len(cells[0]) == 3 else "quad4"
    return Mesh.from_cells(np.array(verts), np.array(cells), kind, domain)
