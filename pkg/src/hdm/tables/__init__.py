"""Reference convergence tables and the checks a study must pass against them.

Each ``tableN`` module holds ``CONFIG`` (the study that reproduces it), ``NU``,
``ROWS`` per component as ``(h, (err, order) x 3)`` for ``Pi``, ``grad_D`` and
``H_D``, and ``QUANTITY``: whether the error columns are relative or absolute.
"""
from __future__ import annotations

import importlib
from dataclasses import dataclass

import numpy as np

from ..study import StudyConfig

TABLE_IDS = (1, 2, 3, 4, 5)
KINDS = ("L2", "grad", "hess")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def reference(table_id: int):
    if table_id not in TABLE_IDS:
        raise KeyError(f"no reference table {table_id}")
    return importlib.import_module(f"{__name__}.table{table_id}")


def study_config(table_id: int, **overrides) -> StudyConfig:
    return StudyConfig(**{**reference(table_id).CONFIG, **overrides})


def reference_errors(table_id: int, comp: str, kind: str):
    i = KINDS.index(kind)
    return [row[1 + i][0] for row in reference(table_id).ROWS[comp]]


def reference_orders(table_id: int, comp: str, kind: str):
    i = KINDS.index(kind)
    return [row[1 + i][1] for row in reference(table_id).ROWS[comp]][1:]


def study_errors(report, table_id, comp_index, kind):
    """Errors of a study in the quantity the table reports (relative or absolute)."""
    pre = "abs_" if reference(table_id).QUANTITY == "absolute" else "err_"
    return report.errors(comp_index, pre + kind)


def _within(a, b, rel):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    dev = np.abs(a / b - 1.0)
    return bool(np.all(dev <= rel)), float(dev.max())


def _nu_check(report, ref):
    ok = list(report.nus) == list(ref.NU)
    return Check("nu column", ok, f"{list(report.nus)} vs {list(ref.NU)}")


def _final_orders(report, comp_index, targets, tol, label):
    got = [report.orders(comp_index, "err_" + k)[-1] for k in KINDS]
    ok = all(abs(g - t) <= tol for g, t in zip(got, targets))
    return Check(f"final orders {label}", ok,
                 f"{np.round(got, 4).tolist()} vs {list(targets)} (+-{tol})")


def verify(table_id: int, report, runtime_limit: float = 60.0) -> list:
    """Acceptance checks of one study against its reference table."""
    ref = reference(table_id)
    comps = list(ref.ROWS)
    checks = []
    if table_id == 3:
        checks.append(_nu_check(report, ref))
        got = study_errors(report, 3, 0, "hess")
        ok, dev = _within(got, reference_errors(3, "u", "hess"), 0.05)
        checks.append(Check("err_hess (absolute) within 5%", ok, f"max deviation {dev:.2%}"))
        targets = [reference_orders(3, "u", k)[-1] for k in KINDS]
        checks.append(_final_orders(report, 0, targets, 0.05, "u"))
        secs = sum(lv["seconds"] for lv in report.metadata.get("levels", []))
        checks.append(Check(f"runtime < {runtime_limit:g} s", secs < runtime_limit, f"{secs:.1f} s"))
    elif table_id == 4:
        checks.append(_nu_check(report, ref))
        for c, name in enumerate(comps):
            o = report.orders(c, "err_hess")[-1]
            checks.append(Check(f"final err_hess order {name}", abs(o - 0.9950) <= 0.05, f"{o:.4f} vs 0.9950"))
            devs = []
            for k in KINDS:
                _, dev = _within(study_errors(report, 4, c, k), reference_errors(4, name, k), 0.05)
                devs.append(dev)
            checks.append(Check(f"errors {name} within 5%", max(devs) <= 0.05, f"max deviation {max(devs):.2%}"))
    elif table_id in (1, 2):
        checks.append(_nu_check(report, ref))
        for c, name in enumerate(comps):
            checks.append(_final_orders(report, c, (1.95, 1.96, 1.02), 0.15, name))
            mono = all(np.all(np.diff(report.errors(c, "err_" + k)) < 0) for k in KINDS)
            checks.append(Check(f"monotone decay {name}", mono, "all three error columns"))
    elif table_id == 5:
        checks.append(_nu_check(report, ref))
        for c, (name, target) in enumerate(zip(comps, (0.887, 0.888))):
            orders = report.orders(c, "err_hess")
            checks.append(Check(f"final err_hess order {name}", abs(orders[-1] - target) <= 0.15,
                                f"{orders[-1]:.4f} vs {target} (+-0.15)"))
            late = orders[2:]           # orders reaching levels 3, 4, 5
            checks.append(Check(f"suboptimal hess order {name}", all(o <= 0.95 for o in late),
                                f"{np.round(late, 4).tolist()} <= 0.95"))
    return checks

