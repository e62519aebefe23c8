"""Inside the gradient recovery (GR) element.

The GR space is continuous P1.  Its gradient is the recovered field
``Q_h grad u`` (a biorthogonal projection onto continuous P1 vector fields),
and its Hessian is ``grad Q_h grad u`` plus a stabilisation
``S (x) (Q_h grad u - grad u)``.  This demo checks the ingredients one by one.
"""
# %%
import numpy as np

from hdm.core import build_hd
from hdm.diagnostics import limit_conformity_what
from hdm.elements import gr_build, gr_p5_residuals, gr_property_report, q_stability
from hdm.exact import manufactured_square
from hdm.mesh import build_structured_mesh, mesh_sequence

mesh = build_structured_mesh("unit_square", "diagonal", 8)
gr = gr_build(mesh)

# %% S is constant on each red child: 1 on the corner children, -3 in the middle
print("child values of S:", np.unique(np.round(np.abs(gr.s_child), 12)))
print("largest stabilisation moment residual:", gr_p5_residuals(gr).max())
print("stability of Q_h in L2:", round(q_stability(gr), 4))

# %% the discrete Hessian is not symmetric, because of the stabilisation term
hd = build_hd(mesh, "gr")
_, _, _, _, hess = hd.tables
print("max |H - H^T| over the basis:", np.abs(hess - np.swapaxes(hess, -1, -2)).max())

# %% approximation properties of Q_h on a clamped smooth function
# p0: ||grad I u - grad u||, p1: L2 stability of Q_h, p2: ||Q_h grad I u - grad u||, p3: ||grad Q_h u - grad u||
meshes = mesh_sequence("unit_square", "diagonal", 8, 4)
for row in gr_property_report(meshes, manufactured_square("ns").exact[0]):
    print("  ".join(f"{k}={v:.4e}" for k, v in row.items()))

# %% the Stokes defect What_D is small but not zero for GR, because grad_D differs from grad Pi_D
for m in meshes[:3]:
    print(f"h={m.h:.4f}  What_D={limit_conformity_what(build_hd(m, 'gr')):.3e}")
