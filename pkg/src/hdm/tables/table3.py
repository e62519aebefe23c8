"""Morley, Navier-Stokes (nu = 1) on the unit square, criss-cross meshes.

The error columns are absolute L2 norms (they equal the relative errors of
the von Karman run in ``table4`` times the exact norms 1/630, 0.0077762 and
0.0571429), so they are compared with the absolute errors of a study.
"""

CONFIG = {"problem": "ns", "method": "morley", "domain": "square", "levels": 6}
QUANTITY = "absolute"
NU = [5, 25, 113, 481, 1985, 8065]
ROWS = {
    "u": [
        (1.0, (0.0135922, None), (0.027680, None), (0.147997, None)),
        (0.5, (0.003499, 1.9579), (0.008910, 1.6353), (0.083508, 0.8256)),
        (0.25, (0.000923, 1.9225), (0.002578, 1.7890), (0.042875, 0.9618)),
        (0.125, (0.000246, 1.9102), (0.000720, 1.8406), (0.022240, 0.9470)),
        (0.0625, (0.000063, 1.9700), (0.000187, 1.9472), (0.011261, 0.9818)),
        (0.03125, (0.000016, 1.9918), (0.000047, 1.9855), (0.005650, 0.9950)),
    ],
}
