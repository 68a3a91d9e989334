"""Space-filling sampling over product boxes."""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc

SCHEMES = ("lhs", "uniform", "sobol")


def sample_box(
    bounds: np.ndarray,
    n: int,
    rng: np.random.Generator,
    scheme: str = "lhs",
) -> np.ndarray:
    """Draw n points inside the box given by (dim, 2) bounds.

    Schemes: stratified Latin hypercube (default), i.i.d. uniform, or a
    scrambled Sobol sequence.
    """
    bounds = np.asarray(bounds, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    d = bounds.shape[0]
    if scheme == "lhs":
        unit = qmc.LatinHypercube(d=d, seed=rng).random(n)
    elif scheme == "uniform":
        unit = rng.uniform(size=(n, d))
    elif scheme == "sobol":
        unit = qmc.Sobol(d=d, scramble=True, seed=rng).random(n)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return qmc.scale(unit, bounds[:, 0], bounds[:, 1])


def sample_design(
    design_bounds: np.ndarray,
    param_bounds: np.ndarray,
    n: int,
    rng: np.random.Generator,
    scheme: str = "lhs",
) -> np.ndarray:
    """Sample z = [x, theta] rows from the product box X x Theta."""
    if n < 2:
        raise ValueError("n must be >= 2")
    joint = np.vstack([np.asarray(design_bounds), np.asarray(param_bounds)])
    return sample_box(joint, n, rng, scheme)
