"""Coercivity, consistency and limit-conformity of the three elements.

These are the quantities a convergence proof controls.  Each is computed on
a short mesh sequence; the ratios between consecutive levels show the rates.
"""
# %%
import numpy as np

from hdm.core import build_hd
from hdm.diagnostics import (coercivity_constant, consistency_upper, limit_conformity_w, limit_conformity_what,
                             riesz_value, sampled_sup, conformity_functional_w)
from hdm.exact import manufactured_square
from hdm.mesh import build_structured_mesh, mesh_sequence

u = manufactured_square("ns").exact
SETUPS = {"morley": ("crisscross", 2), "gr": ("diagonal", 4), "adini": ("rectangles", 2)}

# %% limit-conformity defects are exact suprema (Riesz values); random sampling never exceeds them
hd = build_hd(build_structured_mesh("unit_square", "crisscross", 2), "morley")
r = conformity_functional_w(hd)
print(f"Riesz value {riesz_value(hd.hess_gram, r):.6e} >= sampled {sampled_sup(hd.hess_gram, r):.6e}")

# %% one line per element and level
for element, (pattern, n0) in SETUPS.items():
    print(f"\n{element} ({pattern})")
    print(f"{'h':>8} {'ndof':>6} {'C_D':>9} {'S_D':>10} {'W_D':>10} {'What_D':>10}")
    for m in mesh_sequence("unit_square", pattern, n0, 4):
        hd = build_hd(m, element)
        cd = coercivity_constant(hd, n_samples=0)["l2_part"]
        print(f"{m.h:8.4f} {hd.ndof:6d} {cd:9.5f} {consistency_upper(hd, u):10.3e} "
              f"{limit_conformity_w(hd):10.3e} {limit_conformity_what(hd):10.3e}")

# %% C_D approaches 1/sqrt(first clamped-plate eigenvalue) = 0.02779 from above
print("\nC_D limit:", round(1 / np.sqrt(1294.9339795), 5))
