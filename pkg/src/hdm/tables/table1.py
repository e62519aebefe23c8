"""GR, Navier-Stokes (nu = 1) on the unit square, diagonal meshes."""

CONFIG = {"problem": "ns", "method": "gr", "domain": "square", "levels": 6}
QUANTITY = "relative"
NU = [9, 49, 225, 961, 3969, 16129]
# h, then (error, order) for Pi, grad_D, H_D
ROWS = {
    "u": [
        (0.353553, (1.050933, None), (0.567673, None), (0.582651, None)),
        (0.176777, (0.214195, 2.2947), (0.167145, 1.7640), (0.267188, 1.1248)),
        (0.088388, (0.067498, 1.6660), (0.049952, 1.7425), (0.128511, 1.0560)),
        (0.044194, (0.019240, 1.8107), (0.013806, 1.8552), (0.062184, 1.0473)),
        (0.022097, (0.005156, 1.8999), (0.003646, 1.9209), (0.030460, 1.0296)),
        (0.011049, (0.001336, 1.9482), (0.000939, 1.9575), (0.015060, 1.0162)),
    ],
}
