"""Collect the outcome of every test tagged with an acceptance criterion and
print one PASS/FAIL line per criterion at the end of the run."""
import pytest

CRITERIA = {
    1: "Morley/NS reference table: nu, err_hess within 5%, final orders, runtime",
    2: "Morley/vK reference table: nu, final hess orders, errors within 5%",
    3: "GR/NS and GR/vK: nu, final orders, monotone decay",
    4: "Morley/vK on the L-shape: final hess orders, suboptimal rate",
    5: "algebra: trilinear cancellation, bracket symmetry, cofactor identity",
    6: "solver: Jacobian vs finite differences, linear probe, Picard vs Newton, a priori bound",
    7: "discretisation measures: limit-conformity, consistency, coercivity, GR stabilisation",
    8: "small-instance oracles: Riesz values, dense eigensolve, DOF enumeration",
    9: "exact solutions: strong residuals, characteristic root",
}

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion checked by the test")
    config.addinivalue_line("markers", "slow: runs a full convergence study")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marks = list(item.iter_markers("criterion"))
    if not marks or not (rep.when == "call" or (rep.when == "setup" and not rep.passed)):
        return
    for m in marks:
        for n in m.args:
            _results.setdefault(n, []).append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_results):
        runs = _results[n]
        failed = [name for name, ok in runs if not ok]
        status = "FAIL" if failed else "PASS"
        tr.write_line(f"criterion {n}: {status}  {CRITERIA.get(n, '')}  ({len(runs) - len(failed)}/{len(runs)} tests)")
        for name in failed:
            tr.write_line(f"    failing: {name}")
