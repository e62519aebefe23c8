"""Manufactured exact solutions, their right-hand sides, and a finite-difference check.

Right-hand sides are built from closed-form derivatives.  ``validate_rhs``
recomputes every differential operator from function values only (nested
sixth-order central differences), which makes it an independent oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

from .core import ExactFunctionBundle, SmoothFunction
from .problems import ns_problem, vk_bracket, vk_problem

GAMMA = 0.5444837367
OMEGA = 3 * np.pi / 2
CORNER_RADIUS_MIN = 0.2


@dataclass
class ExactSolutionCase:
    """A manufactured solution with the sources that make it exact.

    ``rhs[c](x, y)`` is the source of the strong equation of component ``c``.
    """
    name: str
    problem: str
    domain: str
    exact: ExactFunctionBundle
    rhs: list
    params: dict = field(default_factory=dict)

    def problem_spec(self):
        if self.problem == "ns":
            return ns_problem(self.params.get("nu", 1.0), self.rhs[0], exact=self.exact)
        return vk_problem(self.rhs[0], self.rhs[1], exact=self.exact)


# -- smooth square case ------------------------------------------------------

def _square_function():
    X, Y = SmoothFunction.X, SmoothFunction.Y
    return SmoothFunction(X ** 2 * Y ** 2 * (1 - X) ** 2 * (1 - Y) ** 2, name="x2y2(1-x)2(1-y)2")


def manufactured_square(problem: str = "ns", nu: float = 1.0) -> ExactSolutionCase:
    """``u = x^2 y^2 (1-x)^2 (1-y)^2`` on the unit square (``u = v`` for von Karman)."""
    X, Y = SmoothFunction.X, SmoothFunction.Y
    u = _square_function()
    e = u.expr
    lap = sympy.diff(e, X, 2) + sympy.diff(e, Y, 2)
    bil = sympy.diff(lap, X, 2) + sympy.diff(lap, Y, 2)
    if problem == "ns":
        f = nu * bil - sympy.diff(lap, X) * sympy.diff(e, Y) + sympy.diff(lap, Y) * sympy.diff(e, X)
        rhs = [SmoothFunction(sympy.expand(f)).value]
        return ExactSolutionCase("ns_square", "ns", "unit_square", ExactFunctionBundle([u]), rhs, {"nu": float(nu)})
    if problem != "vk":
        raise ValueError(f"unknown problem {problem!r}")
    brk = sympy.diff(e, X, 2) * sympy.diff(e, Y, 2) * 2 - 2 * sympy.diff(e, X, Y) ** 2   # [u, u]
    f = bil - brk
    g = bil + brk / 2
    v = _square_function()
    rhs = [SmoothFunction(sympy.expand(f)).value, SmoothFunction(sympy.expand(g)).value]
    return ExactSolutionCase("vk_square", "vk", "unit_square", ExactFunctionBundle([u, v]), rhs)


# -- L-shape singular case ---------------------------------------------------

_T = sympy.Symbol("theta", real=True)


def angular_profile(gamma=GAMMA, omega=OMEGA):
    """The angular factor of the corner singularity as a sympy expression in theta."""
    g = sympy.Float(gamma, 20)
    w = sympy.Float(omega, 20)
    return ((sympy.sin((g - 1) * w) / (g - 1) - sympy.sin((g + 1) * w) / (g + 1))
            * (sympy.cos((g - 1) * _T) - sympy.cos((g + 1) * _T))
            - (sympy.sin((g - 1) * _T) / (g - 1) - sympy.sin((g + 1) * _T) / (g + 1))
            * (sympy.cos((g - 1) * w) - sympy.cos((g + 1) * w)))


def characteristic_residual(gamma=GAMMA, omega=OMEGA) -> float:
    return float(np.sin(gamma * omega) ** 2 - gamma ** 2 * np.sin(omega) ** 2)


class PolarSum:
    """Sum of terms ``r^b h_b(theta)`` closed under Cartesian differentiation."""

    def __init__(self, terms):
        self.terms = {b: sympy.sympify(h) for b, h in terms.items()}

    def _d(self, which):
        out = {}
        for b, h in self.terms.items():
            hp = sympy.diff(h, _T)
            c, s = sympy.cos(_T), sympy.sin(_T)
            new = b * c * h - s * hp if which == "x" else b * s * h + c * hp
            out[b - 1] = out.get(b - 1, 0) + new
        return PolarSum(out)

    def dx(self):
        return self._d("x")

    def dy(self):
        return self._d("y")

    def compile(self):
        fns = [(float(b), sympy.lambdify(_T, h, "numpy")) for b, h in self.terms.items()]

        def f(x, y):
            x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
            r = np.hypot(x, y)
            th = np.mod(np.arctan2(y, x), 2 * np.pi)
            out = np.zeros(np.broadcast(x, y).shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                for b, h in fns:
                    out = out + r ** b * h(th)
            return out
        return f


class CornerFunction:
    """``c(x, y) * s(r, theta)`` with polynomial cutoff ``c = (x^2-1)^2 (y^2-1)^2``
    and biharmonic corner singularity ``s = r^(1+gamma) g(theta)``."""

    def __init__(self, gamma=GAMMA, omega=OMEGA):
        X, Y = SmoothFunction.X, SmoothFunction.Y
        self.gamma, self.omega = gamma, omega
        self.c = SmoothFunction((X ** 2 - 1) ** 2 * (Y ** 2 - 1) ** 2)
        s = PolarSum({sympy.Float(1 + gamma, 20): angular_profile(gamma, omega)})
        self._s = {(0, 0): s}
        self._fn = {}

    def s_expr(self, i, j) -> PolarSum:
        if (i, j) not in self._s:
            self._s[(i, j)] = self.s_expr(i - 1, j).dx() if i > 0 else self.s_expr(i, j - 1).dy()
        return self._s[(i, j)]

    def s(self, i, j):
        """Compiled ``d^{i+j} s / dx^i dy^j``."""
        if (i, j) not in self._fn:
            self._fn[(i, j)] = self.s_expr(i, j).compile()
        return self._fn[(i, j)]

    def _parts(self, x, y, order):
        d = {}
        for i in range(order + 1):
            for j in range(order + 1 - i):
                d[("c", i, j)] = self.c.derivative(i, j)(x, y)
                d[("s", i, j)] = self.s(i, j)(x, y)
        return d

    def value(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        out = self.c.value(x, y) * self.s(0, 0)(x, y)
        return np.where(np.hypot(x, y) == 0, 0.0, out)

    def gradient(self, x, y):
        d = self._parts(x, y, 1)
        gx = d["c", 1, 0] * d["s", 0, 0] + d["c", 0, 0] * d["s", 1, 0]
        gy = d["c", 0, 1] * d["s", 0, 0] + d["c", 0, 0] * d["s", 0, 1]
        g = np.stack([gx, gy], axis=-1)
        return np.where((np.hypot(x, y) == 0)[..., None], 0.0, g)

    def hessian(self, x, y):
        d = self._parts(x, y, 2)
        c, s = (lambda i, j: d["c", i, j]), (lambda i, j: d["s", i, j])
        xx = c(2, 0) * s(0, 0) + 2 * c(1, 0) * s(1, 0) + c(0, 0) * s(2, 0)
        yy = c(0, 2) * s(0, 0) + 2 * c(0, 1) * s(0, 1) + c(0, 0) * s(0, 2)
        xy = c(1, 1) * s(0, 0) + c(1, 0) * s(0, 1) + c(0, 1) * s(1, 0) + c(0, 0) * s(1, 1)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    def bilaplacian(self, x, y):
        """Product-rule expansion; the ``c * bilap(s)`` term vanishes because ``s`` is biharmonic."""
        d = self._parts(x, y, 4)
        c, s = (lambda i, j: d["c", i, j]), (lambda i, j: d["s", i, j])
        lap_c = c(2, 0) + c(0, 2)
        lap_s = s(2, 0) + s(0, 2)
        bil_c = c(4, 0) + 2 * c(2, 2) + c(0, 4)
        glap_c = (c(3, 0) + c(1, 2), c(2, 1) + c(0, 3))
        glap_s = (s(3, 0) + s(1, 2), s(2, 1) + s(0, 3))
        hh = c(2, 0) * s(2, 0) + 2 * c(1, 1) * s(1, 1) + c(0, 2) * s(0, 2)
        return (s(0, 0) * bil_c + 4 * (glap_c[0] * s(1, 0) + glap_c[1] * s(0, 1))
                + 2 * lap_c * lap_s + 4 * hh + 4 * (c(1, 0) * glap_s[0] + c(0, 1) * glap_s[1]))

    def singular_bilaplacian(self, x, y):
        """``bilap(s)``; zero up to the accuracy of ``gamma``."""
        s = self.s
        return s(4, 0)(x, y) + 2 * s(2, 2)(x, y) + s(0, 4)(x, y)


@lru_cache(maxsize=None)
def _corner_function():
    return CornerFunction()


def manufactured_lshape() -> ExactSolutionCase:
    """``u = v = c * r^(1+gamma) g(theta)`` on the L-shape for von Karman."""
    u = _corner_function()

    def f(x, y):
        return u.bilaplacian(x, y) - vk_bracket(u.hessian(x, y), u.hessian(x, y))

    def g(x, y):
        return u.bilaplacian(x, y) + 0.5 * vk_bracket(u.hessian(x, y), u.hessian(x, y))

    return ExactSolutionCase("vk_lshape", "vk", "l_shape", ExactFunctionBundle([u, u]), [f, g],
                             {"gamma": GAMMA, "omega": OMEGA})


def get_case(name: str, nu: float = 1.0) -> ExactSolutionCase:
    if name == "ns_square":
        return manufactured_square("ns", nu)
    if name == "vk_square":
        return manufactured_square("vk")
    if name == "vk_lshape":
        return manufactured_lshape()
    raise ValueError(f"unknown case {name!r}")


# -- finite-difference oracle ------------------------------------------------

@lru_cache(maxsize=None)
def fd_weights(order: int, accuracy: int = 6):
    """Central stencil offsets and weights for ``d^order/dx^order`` of the given accuracy."""
    p = (order + 1) // 2 - 1 + accuracy // 2
    offs = np.arange(-p, p + 1)
    V = np.vander(offs, increasing=True).T.astype(float)
    rhs = np.zeros(len(offs))
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return offs, np.linalg.solve(V, rhs)


def fd_derivative(f, x, y, i, j, h):
    """Nested central differences of ``f`` for ``d^{i+j}/dx^i dy^j``."""
    ox, wx = fd_weights(i) if i else (np.array([0]), np.array([1.0]))
    oy, wy = fd_weights(j) if j else (np.array([0]), np.array([1.0]))
    out = np.zeros(np.shape(x))
    for a, wa in zip(ox, wx):
        for b, wb in zip(oy, wy):
            out += wa * wb * f(x + a * h, y + b * h)
    return out / h ** (i + j)


def _sample_points(domain, n, rng, reach):
    pts = []
    while sum(len(p) for p in pts) < n:
        if domain == "unit_square":
            q = rng.uniform(reach, 1 - reach, size=(4 * n, 2))
        else:
            q = rng.uniform(-1 + reach, 1 - reach, size=(4 * n, 2))
            # stay clear of the two reentrant edges and the corner
            keep = ~((q[:, 0] > -reach) & (q[:, 1] < reach))
            keep &= np.hypot(q[:, 0], q[:, 1]) >= CORNER_RADIUS_MIN
            q = q[keep]
        pts.append(q)
    return np.concatenate(pts)[:n]


def strong_residual(case: ExactSolutionCase, x, y, h):
    """Residual of the strong equations with every operator from finite differences."""
    out = []
    comps = case.exact.components

    def D(c, i, j):
        return fd_derivative(comps[c].value, x, y, i, j, h)

    def bil(c):
        return D(c, 4, 0) + 2 * D(c, 2, 2) + D(c, 0, 4)

    def hess(c):
        xx, xy, yy = D(c, 2, 0), D(c, 1, 1), D(c, 0, 2)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    if case.problem == "ns":
        nu = case.params.get("nu", 1.0)
        lap_x = D(0, 3, 0) + D(0, 1, 2)
        lap_y = D(0, 2, 1) + D(0, 0, 3)
        out.append(nu * bil(0) - lap_x * D(0, 0, 1) + lap_y * D(0, 1, 0) - case.rhs[0](x, y))
    else:
        Hu, Hv = hess(0), hess(1)
        out.append(bil(0) - vk_bracket(Hu, Hv) - case.rhs[0](x, y))
        out.append(bil(1) + 0.5 * vk_bracket(Hu, Hu) - case.rhs[1](x, y))
    return np.stack(out, axis=-1)


def validate_rhs(case: ExactSolutionCase, n_points: int = 50, seed: int = 0, h: float | None = None) -> float:
    """Largest absolute strong-form residual at random interior points."""
    if h is None:
        h = 0.01 if case.domain == "unit_square" else 0.005
    rng = np.random.default_rng(seed)
    reach = 4 * h + 0.02
    p = _sample_points(case.domain, n_points, rng, reach)
    return float(np.abs(strong_residual(case, p[:, 0], p[:, 1], h)).max())
