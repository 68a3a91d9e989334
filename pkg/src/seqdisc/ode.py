"""Nine-state reversible-reaction network and its adaptive RK integrator.

The four model variants share stoichiometry and differ only in the g1 and
g3 fluxes. Integration uses an embedded Dormand-Prince 5(4) pair, jitted
with numba so that thousands of trajectories per campaign round stay cheap
on a single core.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import IntegrationFailure

ATOL = 1e-9
RTOL = 1e-7
STATE_DIM = 9
# zero-based indices of C_4 and C_9, the two measured concentrations
OBSERVED_INDICES = (3, 8)
# fixed initial concentrations for the seven unmeasured states
FIXED_INITIALS = {0: 1.0, 2: 1.0, 4: 1.0, 7: 1.0, 1: 0.1, 5: 0.1, 6: 0.1}


@njit(cache=True)
def _rhs(variant, c, theta):
    c1, c2, c3, c4, c5, c6, c7, c8, c9 = (
        c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8],
    )
    if variant == 2:
        g1 = theta[0] * c1 / (theta[8] + c7)
    else:
        g1 = theta[0] * c1
    g2 = theta[1] * c2
    if variant == 1:
        g3 = theta[2] * c2 * c3 / (theta[8] + c7)
    elif variant == 2:
        g3 = theta[2] * c2 * c3
    elif variant == 3:
        g3 = theta[2] * c2 * c3 / (theta[8] + c9)
    else:
        g3 = theta[2] * c2 * c3 / (theta[8] + c8)
    g4 = theta[3] * c4
    g5 = theta[4] * c4 * c6
    g6 = theta[5] * c7
    g7 = theta[6] * c8
    g8 = theta[7] * c9
    g9 = theta[9] * c5
    g10 = theta[3] * c6

    out = np.empty(9)
    out[0] = -g1 + g2
    out[1] = g1 - g2
    out[2] = -g3 + g4
    out[3] = g3 - g4 - g5 + g6
    out[4] = -g9 + g10
    out[5] = -g5 + g6 + g9 - g10
    out[6] = g5 - g6
    out[7] = -g7 + g8
    out[8] = g7 - g8
    return out


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
])
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_B4 = np.array([
    5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
    -92097 / 339200, 187 / 2100, 1 / 40,
])


@njit(cache=True)
def _dopri_step(variant, theta, t, y, h, k1):
    ks = np.empty((7, 9))
    ks[0] = k1
    for s in range(1, 6):
        acc = np.zeros(9)
        for j in range(s):
            acc += _A[s, j] * ks[j]
        ks[s] = _rhs(variant, y + h * acc, theta)
    y5 = y.copy()
    for s in range(6):
        y5 += h * _B5[s] * ks[s]
    k7 = _rhs(variant, y5, theta)
    ks[6] = k7
    y4 = y.copy()
    for s in range(6):
        y4 += h * _B4[s] * ks[s]
    y4 += h * _B4[6] * k7
    return y5, y4, k7


@njit(cache=True)
def _integrate_one(variant, theta, y0, t_end, rtol, atol):
    y = y0.copy()
    if t_end == 0.0:
        return y, 0
    t = 0.0
    h = min(1e-2, t_end)
    k1 = _rhs(variant, y, theta)
    max_steps = 1_000_000
    for _ in range(max_steps):
        if t >= t_end:
            return y, 0
        if t + h > t_end:
            h = t_end - t
        y5, y4, k7 = _dopri_step(variant, theta, t, y, h, k1)
        # weighted RMS error norm
        err = 0.0
        for i in range(9):
            sc = atol + rtol * max(abs(y[i]), abs(y5[i]))
            d = (y5[i] - y4[i]) / sc
            err += d * d
        err = np.sqrt(err / 9.0)
        if err <= 1.0:
            t += h
            y = y5
            k1 = k7  # FSAL
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
        if h < 1e-13:
            return y, 1
    return y, 2


@njit(cache=True)
def _integrate_batch(variant, thetas, y0s, t_ends, rtol, atol):
    n = thetas.shape[0]
    out = np.empty((n, 9))
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        yi, st = _integrate_one(
            variant, thetas[i], y0s[i], t_ends[i], rtol, atol
        )
        out[i] = yi
        status[i] = st
    return out, status


@dataclass(frozen=True)
class OdeSystem:
    """One variant of the reaction network (variant in 1..4)."""

    variant: int
    state_dim: int = STATE_DIM
    observed_indices: tuple[int, ...] = OBSERVED_INDICES

    def full_initial(self, c4_0: float, c9_0: float) -> np.ndarray:
        y0 = np.empty(STATE_DIM)
        for idx, val in FIXED_INITIALS.items():
            y0[idx] = val
        y0[3] = c4_0
        y0[8] = c9_0
        return y0

    def rhs(self, c: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return _rhs(self.variant, np.asarray(c, float), np.asarray(theta, float))


def integrate_ode(
    system: OdeSystem,
    theta: np.ndarray,
    initial: np.ndarray,
    t_end: float,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> np.ndarray:
    """State at t_end from the adaptive 5(4) pair."""
    theta = np.asarray(theta, dtype=float)
    initial = np.asarray(initial, dtype=float)
    if not (0.0 <= t_end <= 20.0):
        raise ValueError("t_end must lie in [0, 20]")
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(initial))):
        raise ValueError("inputs must be finite")
    y, status = _integrate_one(
        system.variant, theta, initial, float(t_end), rtol, atol
    )
    if status != 0:
        raise IntegrationFailure(
            f"variant {system.variant}: step size underflow at theta={theta}"
        )
    return y


def integrate_batch(
    system: OdeSystem,
    thetas: np.ndarray,
    initials: np.ndarray,
    t_ends: np.ndarray,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> np.ndarray:
    """Integrate many independent (theta, initial, t_end) rows at once."""
    thetas = np.ascontiguousarray(thetas, dtype=float)
    initials = np.ascontiguousarray(initials, dtype=float)
    t_ends = np.ascontiguousarray(t_ends, dtype=float)
    out, status = _integrate_batch(
        system.variant, thetas, initials, t_ends, rtol, atol
    )
    if np.any(status != 0):
        bad = int(np.argmax(status != 0))
        raise IntegrationFailure(
            f"variant {system.variant}: row {bad} failed to integrate"
        )
    return out
