"""GR, von Karman on the unit square, diagonal meshes."""

CONFIG = {"problem": "vk", "method": "gr", "domain": "square", "levels": 6}
QUANTITY = "relative"
NU = [9, 49, 225, 961, 3969, 16129]
ROWS = {
    "u": [
        (0.353553, (1.049207, None), (0.567835, None), (0.582623, None)),
        (0.176777, (0.214594, 2.2896), (0.167636, 1.7601), (0.267284, 1.1242)),
        (0.088388, (0.067946, 1.6591), (0.050446, 1.7325), (0.128565, 1.0559)),
        (0.044194, (0.019702, 1.7860), (0.014295, 1.8192), (0.062217, 1.0471)),
        (0.022097, (0.005632, 1.8068), (0.004146, 1.7858), (0.030483, 1.0293)),
        (0.011049, (0.001844, 1.6109), (0.001483, 1.4828), (0.015082, 1.0152)),
    ],
    "v": [
        (0.353553, (1.051793, None), (0.567587, None), (0.582660, None)),
        (0.176777, (0.213996, 2.2972), (0.166900, 1.7659), (0.267141, 1.1251)),
        (0.088388, (0.067275, 1.6694), (0.049707, 1.7475), (0.128485, 1.0560)),
        (0.044194, (0.019011, 1.8232), (0.013567, 1.8733), (0.062171, 1.0473)),
        (0.022097, (0.004929, 1.9474), (0.003417, 1.9894), (0.030454, 1.0296)),
        (0.011049, (0.001124, 2.1325), (0.000742, 2.2036), (0.015059, 1.0160)),
    ],
}
