"""Morley, von Karman on the unit square, criss-cross meshes."""

CONFIG = {"problem": "vk", "method": "morley", "domain": "square", "levels": 6}
QUANTITY = "relative"
NU = [5, 25, 113, 481, 1985, 8065]
ROWS = {
    "u": [
        (1.0, (8.560933, None), (3.564432, None), (2.585671, None)),
        (0.5, (2.204201, 1.9575), (1.145871, 1.6372), (1.461266, 0.8233)),
        (0.25, (0.581424, 1.9226), (0.331537, 1.7892), (0.750127, 0.9620)),
        (0.125, (0.154705, 1.9101), (0.092576, 1.8405), (0.389103, 0.9470)),
        (0.0625, (0.039490, 1.9700), (0.024008, 1.9471), (0.197022, 0.9818)),
        (0.03125, (0.009929, 1.9918), (0.006062, 1.9855), (0.098852, 0.9950)),
    ],
    "v": [
        (1.0, (8.564924, None), (3.566189, None), (2.586783, None)),
        (0.5, (2.204151, 1.9582), (1.145773, 1.6381), (1.461500, 0.8237)),
        (0.25, (0.581494, 1.9224), (0.331586, 1.7889), (0.750404, 0.9617)),
        (0.125, (0.154705, 1.9102), (0.092575, 1.8407), (0.389239, 0.9470)),
        (0.0625, (0.039488, 1.9700), (0.024007, 1.9472), (0.197091, 0.9818)),
        (0.03125, (0.009928, 1.9918), (0.006062, 1.9855), (0.098886, 0.9950)),
    ],
}
