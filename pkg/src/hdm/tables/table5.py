"""Morley, von Karman on the L-shaped domain with the corner singularity."""

CONFIG = {"problem": "vk", "method": "morley", "domain": "lshape", "levels": 6}
QUANTITY = "relative"
NU = [33, 161, 705, 2945, 12033, 48641]
ROWS = {
    "u": [
        (0.707107, (2.826994, None), (1.985957, None), (1.758240, None)),
        (0.353553, (0.874885, 1.6921), (0.623930, 1.6704), (0.984743, 0.8363)),
        (0.176777, (0.250204, 1.8060), (0.181811, 1.7789), (0.524270, 0.9094)),
        (0.088388, (0.071856, 1.7999), (0.053249, 1.7716), (0.273319, 0.9397)),
        (0.044194, (0.022050, 1.7044), (0.017351, 1.6178), (0.143736, 0.9272)),
        (0.022097, (0.007491, 1.5575), (0.006560, 1.4033), (0.077744, 0.8866)),
    ],
    "v": [
        (0.707107, (1.910146, None), (1.293881, None), (1.351562, None)),
        (0.353553, (0.794724, 1.2652), (0.569137, 1.1849), (0.966468, 0.4838)),
        (0.176777, (0.229244, 1.7936), (0.167686, 1.7630), (0.527682, 0.8731)),
        (0.088388, (0.064624, 1.8267), (0.047896, 1.8078), (0.275565, 0.9373)),
        (0.044194, (0.019339, 1.7406), (0.015209, 1.6550), (0.144849, 0.9278)),
        (0.022097, (0.006411, 1.5929), (0.005694, 1.4175), (0.078259, 0.8882)),
    ],
}
