"""Morley element on the stream-function Navier-Stokes problem.

Solves the manufactured problem on six red-refined criss-cross meshes with
Newton's method and prints relative errors with observed orders.  The
Hessian error should halve with each refinement (order 1), the other two
quarter (order 2).  Run with ``python demos/01_morley_navier_stokes.py``.
"""
# %%
import numpy as np

from hdm.study import StudyConfig, report_lines, run_convergence_study

cfg = StudyConfig(problem="ns", method="morley", nu=1.0, levels=6)
print(f"pattern={cfg.pattern}, coarsest n={cfg.n0}, levels={cfg.levels}")

# %% one Newton solve per level; the trace is the residual norm per iteration
report = run_convergence_study(cfg)
for lev in report.metadata["levels"]:
    trace = ", ".join(f"{r:.1e}" for r in lev["newton_trace"])
    print(f"level {lev['level']}: {lev['iterations']} iterations [{trace}] {lev['seconds']:.2f} s")

# %% the error table, as written by ``hdm run``
print("\n".join(report_lines(report)))

# %% absolute Hessian errors, the quantity listed in the reference table
abs_hess = [row["errors"][0]["abs_hess"] for row in report.rows]
print("absolute Hessian errors:", np.round(abs_hess, 6))
print("final orders (L2, grad, hess):",
      [round(float(report.orders(0, k)[-1]), 4) for k in ("err_L2", "err_grad", "err_hess")])
