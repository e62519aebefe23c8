import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdm.core import build_hd, interpolate
from hdm.exact import manufactured_square
from hdm.mesh import build_structured_mesh, red_refine
from hdm.study import (ConfigError, StudyConfig, compute_errors, corner_cells, csv_header, observed_order,
                       prolongate, read_config, read_csv, report_lines, run_convergence_study, write_config,
                       write_csv)


def test_observed_order_examples():
    assert observed_order([0.083508, 0.042875], [1.0, 0.5])[0] == pytest.approx(0.9618, abs=5e-5)
    assert observed_order([1.0, 1.0, 1.0], [1.0, 0.5, 0.25]) == [0.0, 0.0]
    np.testing.assert_allclose(observed_order([1.0, 0.5, 0.25], [1.0, 0.5, 0.25]), [1.0, 1.0])
    with pytest.raises(ValueError):
        observed_order([1.0, 0.0], [1.0, 0.5])
    with pytest.raises(ValueError):
        observed_order([1.0, 0.5], [0.5, 1.0])


@settings(max_examples=50, deadline=None)
@given(p=st.floats(0.1, 4.0), c=st.floats(1e-6, 1e3), ratio=st.floats(1.2, 4.0))
def test_observed_order_recovers_power_laws(p, c, ratio):
    hs = [ratio ** -i for i in range(4)]
    np.testing.assert_allclose(observed_order([c * h ** p for h in hs], hs), p, rtol=1e-9)


def test_config_defaults_and_validation():
    cfg = StudyConfig()
    assert (cfg.problem, cfg.method, cfg.nu, cfg.pattern, cfg.n0) == ("ns", "morley", 1.0, "crisscross", 1)
    assert StudyConfig(method="gr").pattern == "diagonal" and StudyConfig(method="gr").n0 == 4
    assert StudyConfig(problem="vk", domain="lshape").case_name == "vk_lshape"
    for bad in (dict(problem="heat"), dict(method="argyris"), dict(levels=1), dict(nu=0.0),
                dict(method="adini", domain="lshape"), dict(domain="lshape"), dict(method="gr", pattern="rectangles")):
        with pytest.raises(ConfigError):
            StudyConfig(**bad)


def test_config_file_round_trip(tmp_path):
    cfg = StudyConfig(problem="vk", method="gr", levels=3, nu=0.1, diagnostics=True, newton_tol=1e-11)
    path = tmp_path / "study.cfg"
    write_config(cfg, path)
    assert read_config(path) == cfg


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("# study\nproblem = ns\nsolverr = newton\n")
    with pytest.raises(ConfigError, match="solverr"):
        read_config(path)
    path.write_text("levels 3\n")
    with pytest.raises(ConfigError, match="key=value"):
        read_config(path)
    path.write_text("diagnostics = maybe\n")
    with pytest.raises(ConfigError):
        read_config(path)
    path.write_text("method = gr  # comment\n\n")
    assert read_config(path).nu == 1.0


def test_small_study_csv(tmp_path):
    rep = run_convergence_study(StudyConfig(problem="vk", method="morley", levels=3))
    assert rep.nus == [5, 25, 113]
    assert all(m["newton_trace"][-1] <= 1e-10 for m in rep.metadata["levels"])
    lines = report_lines(rep)
    assert lines[0].split(",") == csv_header(2) and len(lines) == 4
    assert lines[1].split(",")[3] == "-"
    path = tmp_path / "out.csv"
    write_csv(rep, path)
    rows = read_csv(path)
    assert len(rows) == 3 and rows[2]["nu"] == "113"
    assert float(rows[2]["err_hess_v"]) == pytest.approx(rep.errors(1)[2], rel=1e-5)
    assert float(rows[2]["ord_hess_u"]) == pytest.approx(rep.orders(0)[1], abs=1e-4)


def test_study_with_diagnostics_and_coarse_start(tmp_path):
    cfg = StudyConfig(method="gr", levels=2, diagnostics=True)
    rep = run_convergence_study(cfg)
    assert len(rep.diagnostics) == 2 and all(d.stability_holds for d in rep.diagnostics)
    path = tmp_path / "d.csv"
    write_csv(rep, path)
    text = path.read_text()
    assert "\n\nh,ndof,coercivity_l2" in text and len(read_csv(path)) == 2

    warm = run_convergence_study(StudyConfig(method="gr", levels=2, initial_guess="coarse_level_interpolation"))
    np.testing.assert_allclose(warm.errors(), rep.errors(), rtol=1e-8)
    assert warm.metadata["levels"][1]["iterations"] <= rep.metadata["levels"][1]["iterations"]


def test_compute_errors_of_the_interpolant_are_small_and_relative():
    hd = build_hd(build_structured_mesh("unit_square", "crisscross", 16), "morley")
    u = manufactured_square("ns").exact
    e = compute_errors(hd, interpolate(hd, u), u)[0]
    assert e["norm_L2"] == pytest.approx(1 / 630, rel=1e-10)
    assert e["err_L2"] == pytest.approx(e["abs_L2"] / e["norm_L2"])
    assert e["err_L2"] < e["err_grad"] < e["err_hess"] < 0.2


def test_corner_cells():
    m = build_structured_mesh("l_shape", "diagonal", 2)
    cells = corner_cells(m)
    assert len(cells) > 0
    assert all(np.any(np.all(m.cell_coords[c] == 0.0, axis=1)) for c in cells)
    # two diagonal-pattern triangles share the corner (0, 0) of the square
    assert len(corner_cells(build_structured_mesh("unit_square", "diagonal", 2))) == 2


def test_prolongation_is_exact_for_gr():
    """GR reconstructions are continuous P1 functions, which nest under red refinement."""
    coarse = build_structured_mesh("unit_square", "diagonal", 4)
    fine = red_refine(coarse)
    hc, hf = build_hd(coarse, "gr"), build_hd(fine, "gr")
    c = np.random.default_rng(0).standard_normal(hc.ndof)
    vc = np.where(hc.element.gr.vertex_dof >= 0, c[hc.element.gr.vertex_dof], 0.0)
    expected = {tuple(p): v for p, v in zip(coarse.vertices, vc)}
    for a, b in coarse.edges:
        expected[tuple(0.5 * (coarse.vertices[a] + coarse.vertices[b]))] = 0.5 * (vc[a] + vc[b])
    got = prolongate(hc, c, hf)[:, 0]
    vd = hf.element.gr.vertex_dof
    for v in np.flatnonzero(vd >= 0):
        assert got[vd[v]] == pytest.approx(expected[tuple(fine.vertices[v])], abs=1e-14)


@pytest.mark.parametrize("element,pattern", [("morley", "crisscross"), ("adini", "rectangles")])
def test_prolongation_keeps_the_coarse_accuracy(element, pattern):
    u = manufactured_square("ns").exact
    coarse = build_structured_mesh("unit_square", pattern, 8)
    hc, hf = build_hd(coarse, element), build_hd(red_refine(coarse), element)
    c = interpolate(hc, u).coeffs
    e_coarse = compute_errors(hc, c, u)[0]["err_hess"]
    e_prol = compute_errors(hf, prolongate(hc, c, hf)[:, 0], u)[0]["err_hess"]
    e_direct = compute_errors(hf, interpolate(hf, u), u)[0]["err_hess"]
    # averaging at the new vertices on coarse edges adds an error of the coarse order
    assert e_direct < e_prol <= 1.5 * e_coarse
