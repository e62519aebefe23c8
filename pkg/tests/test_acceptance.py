"""Acceptance criteria 1-9.

Every test carries ``@pytest.mark.criterion(n)``; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the run.  Criteria 1-4 rerun the
reference convergence studies (a few minutes in total).
"""
import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hdm import tables
from hdm.core import build_hd
from hdm.diagnostics import (coercivity_constant, conformity_functional_w, conformity_functional_what,
                             consistency_upper, limit_conformity_w, limit_conformity_what, riesz_value,
                             sampled_sup, stability_bound_check)
from hdm.elements import gr_build, gr_p5_residuals
from hdm.exact import (CORNER_RADIUS_MIN, GAMMA, OMEGA, characteristic_residual, get_case,
                       manufactured_square, validate_rhs)
from hdm.mesh import build_structured_mesh, mesh_sequence, mesh_stats
from hdm.problems import cofactor, linear_probe, ns_problem, vk_bracket, vk_problem
from hdm.solver import assemble_jacobian, assemble_residual, newton_solve, picard_iterate
from hdm.study import run_convergence_study

# mesh sequence of each element's reference study; Adini has none, so it uses rectangles from n = 1
SEQUENCES = {"morley": ("crisscross", 1), "gr": ("diagonal", 4), "adini": ("rectangles", 1)}


def ratios(values):
    v = np.asarray(values, dtype=float)
    return v[1:] / v[:-1]


# -- 5: algebra ------------------------------------------------------------------

def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@pytest.mark.criterion(5)
@pytest.mark.parametrize("spec", [ns_problem(1.0), ns_problem(0.01), vk_problem()], ids=["ns", "ns_small_nu", "vk"])
def test_trilinear_form_cancels_on_random_tuples(spec):
    rng = np.random.default_rng(0)
    Lam = _sym(rng.standard_normal((100, spec.k, 2, 2)))
    Th = rng.standard_normal((100, spec.k, 2))
    b = spec.B_density(Lam, Th, Th)
    bound = 1e-12 * np.linalg.norm(Lam.reshape(100, -1), axis=1) * np.sum(Th ** 2, axis=(1, 2))
    assert np.all(np.abs(b) <= bound), np.abs(b).max()


@pytest.mark.criterion(5)
@settings(max_examples=100, deadline=None)
@given(lam=arrays(float, (2, 2, 2), elements=st.floats(-10, 10)),
       th=arrays(float, (2, 2), elements=st.floats(-10, 10)))
def test_trilinear_form_cancels_for_arbitrary_arguments(lam, th):
    for spec in (ns_problem(), vk_problem()):
        L, T = lam[:spec.k], th[:spec.k]
        assert abs(spec.B_density(L, T, T)) <= 1e-12 * np.linalg.norm(L) * np.sum(T ** 2) + 1e-300


@pytest.mark.criterion(5)
def test_bracket_is_symmetric():
    rng = np.random.default_rng(1)
    H1, H2 = _sym(rng.standard_normal((100, 2, 2))), _sym(rng.standard_normal((100, 2, 2)))
    scale = np.linalg.norm(H1.reshape(100, -1), axis=1) * np.linalg.norm(H2.reshape(100, -1), axis=1)
    assert np.all(np.abs(vk_bracket(H1, H2) - vk_bracket(H2, H1)) <= 1e-14 * scale)


@pytest.mark.criterion(5)
def test_cofactor_contraction_is_twice_the_determinant():
    H = _sym(np.random.default_rng(2).standard_normal((100, 2, 2)))
    lhs = np.sum(cofactor(H) * H, axis=(-2, -1))
    assert np.all(np.abs(lhs - 2 * np.linalg.det(H)) <= 1e-14 * np.maximum(np.sum(H ** 2, axis=(-2, -1)), 1.0))


# -- 6: solver -------------------------------------------------------------------

SMALL = {"morley": ("unit_square", "crisscross", 2), "gr": ("unit_square", "diagonal", 4),
         "adini": ("unit_square", "rectangles", 3)}
PAIRS = [(p, e) for p in ("ns", "vk") for e in ("morley", "gr", "adini")]


def _spec(problem, nu=1.0):
    return get_case("ns_square" if problem == "ns" else "vk_square", nu).problem_spec()


@pytest.mark.criterion(6)
@pytest.mark.parametrize("problem,element", PAIRS)
def test_jacobian_matches_central_differences(problem, element):
    hd = build_hd(build_structured_mesh(*SMALL[element]), element)
    spec = _spec(problem)
    rng = np.random.default_rng(PAIRS.index((problem, element)))
    n = spec.k * hd.ndof
    worst = 0.0
    for _ in range(10):
        psi = rng.standard_normal(n) * rng.uniform(0.01, 10)
        d = rng.standard_normal(n)
        eps = 1e-6 * np.linalg.norm(psi)
        jd = assemble_jacobian(hd, spec, psi) @ d
        fd = (assemble_residual(hd, spec, psi + eps * d) - assemble_residual(hd, spec, psi - eps * d)) / (2 * eps)
        worst = max(worst, np.linalg.norm(fd - jd) / np.linalg.norm(jd))
    assert worst <= 1e-6, worst


@pytest.mark.criterion(6)
@pytest.mark.parametrize("problem,element", PAIRS)
def test_newton_solves_the_linear_probe_in_one_iteration(problem, element):
    hd = build_hd(build_structured_mesh(*SMALL[element]), element)
    sol = newton_solve(hd, linear_probe(_spec(problem)))
    assert sol.iterations == 1


@pytest.mark.criterion(6)
@pytest.mark.parametrize("element,pattern", [("morley", "crisscross"), ("gr", "diagonal"), ("adini", "rectangles")])
def test_picard_reaches_newton_solution_within_a_priori_bound(element, pattern):
    hd = build_hd(build_structured_mesh("unit_square", pattern, 8), element)
    spec = _spec("ns", 1.0)
    c_d = coercivity_constant(hd, n_samples=0)["l2_part"]
    checks = []
    fixed, incs = picard_iterate(hd, spec, tol=1e-13,
                                 callback=lambda f: checks.append(stability_bound_check(hd, spec, f, c_d)))
    assert incs[-1] <= 1e-13
    assert all(c["holds"] for c in checks), [(c["lhs"], c["rhs"]) for c in checks if not c["holds"]]
    diff = np.abs(fixed.coeffs - newton_solve(hd, spec).coeffs).max()
    assert diff <= 1e-8, diff


# -- 7: discretisation measures ----------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.parametrize("element,pattern,n0", [("adini", "rectangles", 2), ("gr", "diagonal", 4)])
def test_stokes_limit_conformity_vanishes(element, pattern, n0):
    vals = [limit_conformity_what(build_hd(m, element)) for m in mesh_sequence("unit_square", pattern, n0, 3)]
    assert max(vals) <= 1e-11, vals


@pytest.mark.criterion(7)
def test_morley_limit_conformity_halves():
    hds = [build_hd(m, "morley") for m in mesh_sequence("unit_square", "crisscross", 2, 5)]
    w = ratios([limit_conformity_w(hd) for hd in hds])
    what = ratios([limit_conformity_what(hd) for hd in hds])
    assert np.all((w >= 0.4) & (w <= 0.62)), w
    assert np.all((what >= 0.4) & (what <= 0.62)), what


@pytest.mark.criterion(7)
@pytest.mark.parametrize("element,pattern,n0", [("morley", "crisscross", 2), ("gr", "diagonal", 4),
                                                ("adini", "rectangles", 2)])
def test_consistency_decays_linearly(element, pattern, n0):
    u = manufactured_square("ns").exact
    r = ratios([consistency_upper(build_hd(m, element), u) for m in mesh_sequence("unit_square", pattern, n0, 5)])
    assert np.all((r >= 0.4) & (r <= 0.62)), r


@pytest.mark.criterion(7)
@pytest.mark.parametrize("element", sorted(SEQUENCES))
def test_coercivity_constant_is_stable_over_levels_two_to_five(element):
    pattern, n0 = SEQUENCES[element]
    meshes = mesh_sequence("unit_square", pattern, n0, 5)[1:5]
    cd = [coercivity_constant(build_hd(m, element), n_samples=0)["l2_part"] for m in meshes]
    spread = (max(cd) - min(cd)) / max(cd)
    assert spread <= 0.10, (np.round(cd, 5).tolist(), spread)


@pytest.mark.criterion(7)
def test_gr_stabilisation_moments_vanish_on_every_cell():
    for pattern, n0 in (("diagonal", 4), ("crisscross", 1)):
        for m in mesh_sequence("unit_square", pattern, n0, 6):
            assert gr_p5_residuals(gr_build(m)).max() <= 1e-12
    for m in mesh_sequence("l_shape", "diagonal", 2, 4):
        assert gr_p5_residuals(gr_build(m)).max() <= 1e-12


# -- 8: oracles on small instances -------------------------------------------------

SMALL_MESHES = [("morley", "crisscross"), ("morley", "diagonal"), ("gr", "crisscross"),
                ("gr", "diagonal"), ("adini", "rectangles")]


@pytest.mark.criterion(8)
@pytest.mark.parametrize("element,pattern", SMALL_MESHES)
def test_riesz_values_bound_and_attain_random_samples(element, pattern):
    hd = build_hd(build_structured_mesh("unit_square", pattern, 2), element)
    G = hd.hess_gram
    for r in (conformity_functional_w(hd), conformity_functional_what(hd)):
        val, top = riesz_value(G, r, return_maximiser=True)
        sampled = sampled_sup(G, r, n_samples=500, seed=0)
        seeded = sampled_sup(G, r, n_samples=500, seed=0, extra=(top,))
        assert sampled <= val * (1 + 1e-10) + 1e-300
        assert seeded >= 0.95 * val and seeded <= val * (1 + 1e-10) + 1e-300


@pytest.mark.criterion(8)
@pytest.mark.parametrize("element,pattern", SMALL_MESHES)
def test_coercivity_matches_dense_eigensolve(element, pattern):
    for n in (2, 3, 4):
        hd = build_hd(build_structured_mesh("unit_square", pattern, n), element)
        M, G = hd.pi_gram.toarray(), hd.hess_gram.toarray()
        # oracle: Cholesky whitening and a standard symmetric eigenproblem
        L = np.linalg.cholesky(G)
        Li = scipy.linalg.solve_triangular(L, np.eye(len(G)), lower=True)
        oracle = np.sqrt(np.linalg.eigvalsh(Li @ M @ Li.T).max())
        got = coercivity_constant(hd, n_samples=0)["l2_part"]
        assert abs(got - oracle) <= 1e-10 * oracle
        if hd.ndof > 2:
            sparse = coercivity_constant(hd, n_samples=0, method="sparse")["l2_part"]
            assert abs(sparse - oracle) <= 1e-10 * oracle


TOL = 1e-12


def on_boundary(domain, p):
    """Geometric boundary test, independent of the mesh connectivity."""
    x, y = p
    if domain == "unit_square":
        return min(x, 1 - x, y, 1 - y) < TOL
    outer = min(abs(abs(x) - 1), abs(abs(y) - 1)) < TOL
    reentrant = (abs(x) < TOL and y <= TOL) or (abs(y) < TOL and x >= -TOL)
    return outer or reentrant


def enumerate_entities(m):
    """Interior vertices and edges by explicit loops over cells and coordinates."""
    edges = set()
    k = m.cells.shape[1]
    for cell in m.cells.tolist():
        for i in range(k):
            edges.add(frozenset((cell[i], cell[(i + 1) % k])))
    used = {v for cell in m.cells.tolist() for v in cell}
    iv = [v for v in used if not on_boundary(m.domain, m.vertices[v])]
    ie = []
    for e in edges:
        a, b = sorted(e)
        mid = 0.5 * (m.vertices[a] + m.vertices[b])
        if not (on_boundary(m.domain, m.vertices[a]) and on_boundary(m.domain, m.vertices[b])
                and on_boundary(m.domain, mid)):
            ie.append(e)
    return len(used), len(edges), len(iv), len(ie)


@pytest.mark.criterion(8)
@pytest.mark.parametrize("domain", ["unit_square", "l_shape"])
@pytest.mark.parametrize("pattern,elements", [("diagonal", ("morley", "gr")), ("crisscross", ("morley", "gr")),
                                              ("rectangles", ("adini",))])
def test_dof_counts_match_entity_enumeration(domain, pattern, elements):
    for n in range(1, 9):
        m = build_structured_mesh(domain, pattern, n)
        nv, ne, niv, nie = enumerate_entities(m)
        s = mesh_stats(m)
        assert (s["n_vertices"], s["n_edges"], s["n_interior_vertices"], s["n_interior_edges"]) == (nv, ne, niv, nie)
        for el in elements:
            expected = {"morley": niv + nie, "gr": niv, "adini": 3 * niv}[el]
            assert build_hd(m, el).ndof == expected, (el, n)


# -- 9: exact solutions ------------------------------------------------------------

@pytest.mark.criterion(9)
@pytest.mark.parametrize("name", ["ns_square", "vk_square"])
def test_square_sources_solve_the_strong_equations(name):
    for nu in (1.0, 0.1):
        res = validate_rhs(get_case(name, nu) if name == "ns_square" else get_case(name))
        assert res <= 1e-5, (nu, res)


@pytest.mark.criterion(9)
def test_lshape_source_solves_the_strong_equations_away_from_the_corner():
    assert CORNER_RADIUS_MIN >= 0.2
    res = validate_rhs(get_case("vk_lshape"))
    assert res <= 1e-4, res


@pytest.mark.criterion(9)
def test_singular_exponent_solves_the_characteristic_equation():
    assert abs(characteristic_residual()) <= 1e-9
    assert abs(np.sin(GAMMA * OMEGA) ** 2 - GAMMA ** 2 * np.sin(OMEGA) ** 2) <= 1e-9


# -- 1-4: reference convergence studies --------------------------------------------

@pytest.fixture(scope="module")
def study():
    cache = {}

    def get(table_id):
        if table_id not in cache:
            cache[table_id] = run_convergence_study(tables.study_config(table_id))
        return cache[table_id]
    return get


def _verify(table_id, report):
    checks = tables.verify(table_id, report)
    for c in checks:
        print(f"table {table_id}: {c.line()}")
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, failed


@pytest.mark.slow
@pytest.mark.criterion(1)
def test_morley_navier_stokes_reference_table(study):
    rep = study(3)
    _verify(3, rep)
    finest = rep.metadata["levels"][-1]["newton_trace"][-1]
    assert finest <= 1e-10, finest


@pytest.mark.slow
@pytest.mark.criterion(2)
def test_morley_von_karman_reference_table(study):
    _verify(4, study(4))


@pytest.mark.slow
@pytest.mark.criterion(3)
@pytest.mark.parametrize("table_id", [1, 2], ids=["navier_stokes", "von_karman"])
def test_gr_reference_tables(study, table_id):
    _verify(table_id, study(table_id))


@pytest.mark.slow
@pytest.mark.criterion(4)
def test_morley_von_karman_lshape_reference_table(study):
    # the nu column is checked as well; it matches although only the orders are required
    _verify(5, study(5))
