"""
Built-in simulation presets.

paper-gaussian: 2200 draws, 700 from N(-10, 1.2^2), 1000 from N(0, 2^2), 500 from N(5, 5^2)
paper-poisson:  the published 2666-observation frequency table over x = 0..20
"""

from __future__ import annotations

from typing import Dict, List, Tuple

from src.distributions import ComponentParams, Gaussian1DParams

PAPER_GAUSSIAN: List[Tuple[ComponentParams, int]] = [
    (Gaussian1DParams(mu=-10.0, sigma2=1.2 ** 2), 700),
    (Gaussian1DParams(mu=0.0, sigma2=2.0 ** 2), 1000),
    (Gaussian1DParams(mu=5.0, sigma2=5.0 ** 2), 500),
]

# (value, frequency)
PAPER_POISSON_TABLE: Tuple[Tuple[int, int], ...] = (
    (0, 162), (1, 267), (2, 271), (3, 185), (4, 111), (5, 61), (6, 120),
    (7, 210), (8, 215), (9, 136), (10, 73), (11, 43), (12, 14), (13, 160),
    (14, 230), (15, 243), (16, 104), (17, 36), (18, 15), (19, 10), (20, 0),
)
PAPER_POISSON_N = 2666

# Published fits, components sorted by location
PAPER_GAUSSIAN_FIT: Dict[str, Tuple[float, ...]] = {
    "mu": (-9.99, -0.05, 4.64),
    "sigma": (1.17, 1.93, 4.86),
    "weights": (0.317, 0.445, 0.237),
}
PAPER_POISSON_FIT: Dict[str, Tuple[float, ...]] = {
    "lambda": (1.66, 6.72, 12.85),
    "weights": (0.328, 0.256, 0.416),
}

PRESETS = ("paper-gaussian", "paper-poisson")


def poisson_table_arrays() -> Tuple[List[int], List[int]]:
    values = [v for v, _ in PAPER_POISSON_TABLE]
    counts = [c for _, c in PAPER_POISSON_TABLE]
    return values, counts
