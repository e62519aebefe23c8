import numpy as np
import pytest
import scipy.sparse as sp
import sympy
from hypothesis import given, settings, strategies as st

from hdm.core import (DiscreteField, ExactFunctionBundle, SmoothFunction, build_hd, hd_norm, interpolate,
                      reconstruct)
from hdm.exact import fd_derivative, manufactured_square
from hdm.mesh import build_structured_mesh
from hdm.study import compute_errors

X, Y = SmoothFunction.X, SmoothFunction.Y

MESHES = {
    "morley": ("unit_square", "crisscross", 3),
    "gr": ("unit_square", "diagonal", 4),
    "adini": ("unit_square", "rectangles", 3),
}


@pytest.fixture(scope="module", params=sorted(MESHES))
def hd(request):
    return build_hd(build_structured_mesh(*MESHES[request.param]), request.param)


def test_ndof_examples():
    assert build_hd(build_structured_mesh("unit_square", "crisscross", 2), "morley").ndof == 25
    assert build_hd(build_structured_mesh("unit_square", "diagonal", 8), "gr").ndof == 49
    assert build_hd(build_structured_mesh("unit_square", "rectangles", 2), "adini").ndof == 3


def test_build_rejects_mismatched_meshes():
    tri = build_structured_mesh("unit_square", "diagonal", 2)
    quad = build_structured_mesh("unit_square", "rectangles", 2)
    with pytest.raises(ValueError):
        build_hd(tri, "adini")
    with pytest.raises(ValueError):
        build_hd(quad, "morley")
    with pytest.raises(ValueError):
        build_hd(tri, "argyris")


def test_table_shapes(hd):
    xy, w, pi, grad, hess = hd.tables
    nc, nq, nl = pi.shape
    assert nc == hd.mesh.n_cells and nl == hd.n_local
    assert grad.shape == (nc, nq, nl, 2) and hess.shape == (nc, nq, nl, 2, 2)
    assert w.sum() == pytest.approx(1.0, rel=1e-13)
    # GR adds S (x) (Q grad u - grad u), which is not symmetric
    if hd.element_kind != "gr":
        np.testing.assert_allclose(hess, np.swapaxes(hess, -1, -2), atol=1e-9 * np.abs(hess).max())


def test_zero_coefficients_give_zero_fields(hd):
    P, G, H = reconstruct(hd, DiscreteField.zeros(hd, 2))
    assert P.shape[-1] == 2 and not P.any() and not G.any() and not H.any()
    assert hd_norm(hd, np.zeros(hd.ndof)) == 0.0
    zero = ExactFunctionBundle([SmoothFunction(0 * X)])
    assert not interpolate(hd, zero).coeffs.any()


def test_hd_norm_of_basis_vectors(hd):
    G = hd.hess_gram
    for i in (0, hd.ndof // 2, hd.ndof - 1):
        e = np.zeros(hd.ndof)
        e[i] = 1.0
        assert hd_norm(hd, e) == pytest.approx(np.sqrt(G[i, i]), rel=1e-14)


def test_gram_matrices_are_symmetric_and_positive(hd):
    for G in (hd.pi_gram, hd.grad_gram, hd.hess_gram):
        assert abs(G - G.T).max() <= 1e-13 * abs(G).max()
    # ||H_D .|| is a norm; Q_h grad has a kernel on even diagonal meshes, so grad_D alone may not be
    for G, definite in ((hd.pi_gram, True), (hd.hess_gram, True), (hd.grad_gram, hd.element_kind != "gr")):
        ev = np.linalg.eigvalsh(G.toarray())
        assert ev.min() > 1e-10 * ev.max() if definite else ev.min() > -1e-14 * ev.max()


def test_assembly_is_deterministic_and_matches_naive_sum(hd):
    rng = np.random.default_rng(0)
    loc = rng.standard_normal((hd.mesh.n_cells, hd.n_local, hd.n_local))
    A1, A2 = hd.pattern(1).matrix(loc), hd.pattern(1).matrix(loc)
    assert np.array_equal(A1.data, A2.data)
    cd = hd.cell_dofs
    I = np.broadcast_to(cd[:, :, None], loc.shape)
    J = np.broadcast_to(cd[:, None, :], loc.shape)
    ok = (I >= 0) & (J >= 0)
    ref = sp.coo_matrix((loc[ok], (I[ok], J[ok])), shape=A1.shape).toarray()
    np.testing.assert_allclose(A1.toarray(), ref, atol=1e-12)
    v = rng.standard_normal((hd.mesh.n_cells, hd.n_local))
    ref_v = np.zeros(hd.ndof)
    np.add.at(ref_v, cd[cd >= 0], v[cd >= 0])
    np.testing.assert_allclose(hd.pattern(1).vector(v), ref_v, atol=1e-12)


def test_block_layout(hd):
    rng = np.random.default_rng(1)
    c = rng.standard_normal((hd.ndof, 2))
    f = DiscreteField(hd, c)
    np.testing.assert_array_equal(f.flat[:hd.ndof], c[:, 0])
    np.testing.assert_array_equal(f.flat[hd.ndof:], c[:, 1])
    np.testing.assert_array_equal(DiscreteField.from_flat(hd, f.flat, 2).coeffs, c)
    with pytest.raises(ValueError):
        DiscreteField(hd, np.zeros(hd.ndof + 1))
    # the k-component pattern is block diagonal
    assert hd.pattern(2).shape == (2 * hd.ndof, 2 * hd.ndof)


def test_evaluate_on_cell_subset_matches_full(hd):
    c = np.random.default_rng(2).standard_normal(hd.ndof)
    _, _, P, G, H = hd.evaluate(c)
    cells = np.array([0, 3, hd.mesh.n_cells - 1])
    _, _, Ps, Gs, Hs = hd.evaluate(c, rule=hd.rule, cells=cells)
    np.testing.assert_allclose(Ps, P[cells], atol=1e-14)
    np.testing.assert_allclose(Hs, H[cells], atol=1e-12 * np.abs(H).max())


def test_interpolation_error_converges_for_morley():
    u = manufactured_square("ns").exact
    errs = []
    for n in (8, 16, 32):
        hd = build_hd(build_structured_mesh("unit_square", "crisscross", n), "morley")
        errs.append(compute_errors(hd, interpolate(hd, u), u)[0]["err_hess"])
    assert 0.4 <= errs[2] / errs[1] <= 0.6
    # below the relative Hessian error of the discrete solution at n = 32
    assert errs[2] < 0.0989


def test_interpolant_of_quadratic_is_exact_on_free_cells():
    hd = build_hd(build_structured_mesh("unit_square", "diagonal", 4), "morley")
    q = ExactFunctionBundle([SmoothFunction(X * Y)])
    c = interpolate(hd, q).coeffs
    cells = np.flatnonzero(np.all(hd.cell_dofs >= 0, axis=1))
    xy, _, P, G, H = hd.evaluate(c, cells=cells)
    np.testing.assert_allclose(P[..., 0], xy[..., 0] * xy[..., 1], atol=1e-13)
    np.testing.assert_allclose(H[..., 0, 0, 1], 1.0, atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.1, 0.9), y=st.floats(0.1, 0.9))
def test_smooth_function_derivatives_match_differences(x, y):
    f = SmoothFunction(sympy_expr())
    for i, j in ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 2)):
        h = {1: 1e-3, 2: 1e-2, 4: 5e-2}[i + j]         # balance truncation and round-off
        fd = fd_derivative(f.value, np.array([x]), np.array([y]), i, j, h)[0]
        assert f.derivative(i, j)(x, y) == pytest.approx(fd, rel=1e-6, abs=1e-8)
    assert f.bilaplacian(x, y) == pytest.approx(
        f.derivative(4, 0)(x, y) + 2 * f.derivative(2, 2)(x, y) + f.derivative(0, 4)(x, y))


def sympy_expr():
    return sympy.sin(2 * X) * sympy.exp(Y) + X ** 3 * Y ** 2


def test_smooth_function_broadcasts_constants():
    f = SmoothFunction(3 + 0 * X)
    assert f.value(np.zeros((2, 3)), 0.5).shape == (2, 3)
    assert f.hessian(np.zeros(4), np.zeros(4)).shape == (4, 2, 2)
