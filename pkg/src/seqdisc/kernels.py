"""Stationary covariance functions with analytic derivatives.

All formulas are written for ARD (per-dimension length scales). Input
derivatives are taken with respect to the first argument, which is what
the surrogate needs for parameter-block gradients and Hessians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("rbf", "matern52")
_SQRT5 = np.sqrt(5.0)


@dataclass
class Kernel:
    """Hyperparameters of one stationary covariance function."""

    family: str
    rho2: float
    lengthscales: np.ndarray
    jitter: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        self.lengthscales = np.asarray(self.lengthscales, dtype=float)
        if self.rho2 <= 0 or self.jitter <= 0 or np.any(self.lengthscales <= 0):
            raise ValueError("rho2, jitter and all length scales must be > 0")

    @property
    def dim(self) -> int:
        return self.lengthscales.size

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "rho2": float(self.rho2),
            "lengthscales": self.lengthscales.tolist(),
            "jitter": float(self.jitter),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Kernel":
        return cls(d["family"], d["rho2"], np.array(d["lengthscales"]), d["jitter"])


def _diffs(Zs: np.ndarray, Z: np.ndarray) -> np.ndarray:
    # (B, N, D) differences Zs - Z
    return Zs[:, None, :] - Z[None, :, :]


def cross(kernel: Kernel, Zs: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Covariance matrix k(Zs_b, Z_n), shape (B, N)."""
    D = _diffs(np.atleast_2d(Zs), np.atleast_2d(Z))
    W = 1.0 / kernel.lengthscales**2
    q = np.einsum("bnd,d->bn", D**2, W)
    if kernel.family == "rbf":
        return kernel.rho2 * np.exp(-0.5 * q)
    u = _SQRT5 * np.sqrt(q)
    return kernel.rho2 * (1.0 + u + u**2 / 3.0) * np.exp(-u)


def kernel_eval(kernel: Kernel, z: np.ndarray, zp: np.ndarray) -> float:
    """Scalar covariance k(z, z')."""
    return float(cross(kernel, np.atleast_2d(z), np.atleast_2d(zp))[0, 0])


def cross_grad(
    kernel: Kernel, Zs: np.ndarray, Z: np.ndarray, dims: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """k(Zs, Z) and its gradient in the selected first-argument dims.

    Returns (K (B,N), G (B,N,t)) with G[b,n,j] = dk(Zs_b, Z_n)/dZs_{dims[j]}.
    """
    Zs, Z = np.atleast_2d(Zs), np.atleast_2d(Z)
    dims = np.asarray(dims, dtype=int)
    D = _diffs(Zs, Z)
    W = 1.0 / kernel.lengthscales**2
    q = np.einsum("bnd,d->bn", D**2, W)
    WD = D[:, :, dims] * W[dims]
    if kernel.family == "rbf":
        K = kernel.rho2 * np.exp(-0.5 * q)
        G = -K[:, :, None] * WD
        return K, G
    u = _SQRT5 * np.sqrt(q)
    eu = np.exp(-u)
    K = kernel.rho2 * (1.0 + u + u**2 / 3.0) * eu
    G = -(5.0 / 3.0) * kernel.rho2 * ((1.0 + u) * eu)[:, :, None] * WD
    return K, G


def cross_hess(
    kernel: Kernel, Zs: np.ndarray, Z: np.ndarray, dims: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """k, gradient and Hessian blocks in the selected first-argument dims.

    Returns (K (B,N), G (B,N,t), H (B,N,t,t)).
    """
    Zs, Z = np.atleast_2d(Zs), np.atleast_2d(Z)
    dims = np.asarray(dims, dtype=int)
    D = _diffs(Zs, Z)
    W = 1.0 / kernel.lengthscales**2
    q = np.einsum("bnd,d->bn", D**2, W)
    WD = D[:, :, dims] * W[dims]
    eye = np.diag(W[dims])
    if kernel.family == "rbf":
        K = kernel.rho2 * np.exp(-0.5 * q)
        G = -K[:, :, None] * WD
        outer = np.einsum("bnj,bnk->bnjk", WD, WD)
        H = K[:, :, None, None] * (outer - eye)
        return K, G, H
    u = _SQRT5 * np.sqrt(q)
    eu = np.exp(-u)
    K = kernel.rho2 * (1.0 + u + u**2 / 3.0) * eu
    c1 = (5.0 / 3.0) * kernel.rho2 * (1.0 + u) * eu
    G = -c1[:, :, None] * WD
    outer = np.einsum("bnj,bnk->bnjk", WD, WD)
    c2 = (25.0 / 3.0) * kernel.rho2 * eu
    H = c2[:, :, None, None] * outer - c1[:, :, None, None] * eye
    return K, G, H


def gram(kernel: Kernel, Z: np.ndarray, with_jitter: bool = True) -> np.ndarray:
    """Symmetric training Gram matrix, optionally with jitter on the diagonal."""
    K = cross(kernel, Z, Z)
    K = 0.5 * (K + K.T)
    if with_jitter:
        K = K + kernel.jitter * np.eye(K.shape[0])
    return K
