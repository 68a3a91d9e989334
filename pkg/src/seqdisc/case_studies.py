"""Built-in case studies: four algebraic kinetic models and four ODE models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import DesignSpace, NoiseModel, ParameterSpace, ParametricModel
from .ode import OdeSystem, integrate_batch, integrate_ode


@dataclass(frozen=True)
class CaseStudy:
    """A model set plus the synthetic data-generating configuration."""

    name: str
    models: list[ParametricModel]
    noise: NoiseModel
    design_space: DesignSpace
    generator_index: int
    sample_true_theta: Callable[[np.random.Generator], np.ndarray]
    n0_default: int
    budget_default: int

    @property
    def generator(self) -> ParametricModel:
        return self.models[self.generator_index]


# ---------------------------------------------------------------------------
# Case study 1: four algebraic chemical-kinetic rate laws
# ---------------------------------------------------------------------------
# Shared building blocks, with x1, x2 in [5, 55] and theta in [0, 1]^4:
#   g  = 1 + th3*x1 + th4*x2
#   h1 = 1 + th3*x1
#   h2 = 1 + th4*x2

def _cs1_batch(which: int):
    def ev(X, Th):
        x1, x2 = X[:, 0], X[:, 1]
        p = x1 * x2
        g = 1.0 + Th[:, 2] * x1 + Th[:, 3] * x2
        h1 = 1.0 + Th[:, 2] * x1
        h2 = 1.0 + Th[:, 3] * x2
        if which == 1:
            f1, f2 = Th[:, 0] * p / g, Th[:, 1] * p / g
        elif which == 2:
            f1, f2 = Th[:, 0] * p / g**2, Th[:, 1] * p / h1**2
        elif which == 3:
            f1, f2 = Th[:, 0] * p / h1**2, Th[:, 1] * p / h2**2
        else:
            f1, f2 = Th[:, 0] * p / g, Th[:, 1] * p / h1
        return np.stack([f1, f2], axis=1)

    return ev


def _cs1_single(which: int):
    batch = _cs1_batch(which)

    def ev(x, theta):
        return batch(x[None, :], theta[None, :])[0]

    return ev


def case_study_1_gradients(which: int, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Analytic theta-gradients of the algebraic models, shape (n, E, 4).

    Used by the classical (surrogate-free) benchmark route.
    """
    X = np.atleast_2d(np.asarray(X, float))
    th = np.asarray(theta, float)
    x1, x2 = X[:, 0], X[:, 1]
    p = x1 * x2
    g = 1.0 + th[2] * x1 + th[3] * x2
    h1 = 1.0 + th[2] * x1
    h2 = 1.0 + th[3] * x2
    n = X.shape[0]
    J = np.zeros((n, 2, 4))
    zero = np.zeros(n)

    def rational(col, amp_idx, den, dden3, dden4):
        # f = theta_amp * p / den; den depends on (th3, th4)
        J[:, col, amp_idx] = p / den
        amp = th[amp_idx]
        J[:, col, 2] = -amp * p * dden3 / den**2
        J[:, col, 3] = -amp * p * dden4 / den**2

    if which == 1:
        rational(0, 0, g, x1, x2)
        rational(1, 1, g, x1, x2)
    elif which == 2:
        rational(0, 0, g**2, 2 * g * x1, 2 * g * x2)
        rational(1, 1, h1**2, 2 * h1 * x1, zero)
    elif which == 3:
        rational(0, 0, h1**2, 2 * h1 * x1, zero)
        rational(1, 1, h2**2, zero, 2 * h2 * x2)
    else:
        rational(0, 0, g, x1, x2)
        rational(1, 1, h1, x1, zero)
    return J


CS1_TRUE_THETA = np.array([0.1, 0.01, 0.1, 0.01])


def builtin_case_study_1() -> CaseStudy:
    """Four rival rate laws over x in [5,55]^2; the first one generates data."""
    design = DesignSpace([(5.0, 55.0), (5.0, 55.0)])
    params = ParameterSpace([(0.0, 1.0)] * 4)
    models = [
        ParametricModel(
            name=f"M{i}",
            design_space=design,
            parameter_space=params,
            output_dim=2,
            evaluator=_cs1_single(i),
            batch_evaluator=_cs1_batch(i),
        )
        for i in (1, 2, 3, 4)
    ]
    noise = NoiseModel(np.diag([0.35, 2.3e-3]))
    return CaseStudy(
        name="case1",
        models=models,
        noise=noise,
        design_space=design,
        generator_index=0,
        sample_true_theta=lambda rng: CS1_TRUE_THETA.copy(),
        n0_default=5,
        budget_default=40,
    )


# ---------------------------------------------------------------------------
# Case study 2: four ODE variants of a nine-state reaction network
# ---------------------------------------------------------------------------

def _cs2_single(system: OdeSystem):
    def ev(x, theta):
        y = integrate_ode(system, theta, system.full_initial(x[1], x[2]), x[0])
        return y[list(system.observed_indices)]

    return ev


def _cs2_batch(system: OdeSystem):
    def ev(X, Th):
        inits = np.stack([system.full_initial(c4, c9) for c4, c9 in X[:, 1:3]])
        Y = integrate_batch(system, Th, inits, X[:, 0])
        return Y[:, list(system.observed_indices)]

    return ev


# screening of sampled generator parameters: an almost-flat trajectory makes
# every replicate trivially inconclusive, so redraw until both measured
# states move by at least this much over t in [0, 20]
CS2_MIN_TRAJECTORY_RANGE = 0.05
_CS2_SCREEN_GRID = np.linspace(0.0, 20.0, 21)


def _cs2_theta_informative(theta: np.ndarray) -> bool:
    system = OdeSystem(variant=1)
    init = system.full_initial(0.5, 0.5)
    n = _CS2_SCREEN_GRID.size
    traj = integrate_batch(
        system,
        np.broadcast_to(theta, (n, 10)).copy(),
        np.broadcast_to(init, (n, 9)).copy(),
        _CS2_SCREEN_GRID,
    )
    obs = traj[:, list(system.observed_indices)]
    rng_span = obs.max(axis=0) - obs.min(axis=0)
    return bool(np.all(rng_span >= CS2_MIN_TRAJECTORY_RANGE))


def sample_cs2_true_theta(rng: np.random.Generator, max_tries: int = 200) -> np.ndarray:
    for _ in range(max_tries):
        theta = rng.uniform(0.0, 1.0, size=10)
        if _cs2_theta_informative(theta):
            return theta
    raise RuntimeError("could not draw an informative generator parameter")


def builtin_case_study_2(n_models: int = 4) -> CaseStudy:
    """ODE models over x = (t, C4(0), C9(0)); variant 1 generates the data.

    ``n_models=3`` drops the second variant, which is nearly identical to
    the first when C7 stays small.
    """
    if n_models not in (3, 4):
        raise ValueError("n_models must be 3 or 4")
    design = DesignSpace([(0.0, 20.0), (0.0, 1.0), (0.0, 1.0)])
    params = ParameterSpace([(0.0, 1.0)] * 10)
    variants = (1, 2, 3, 4) if n_models == 4 else (1, 3, 4)
    models = []
    for v in variants:
        system = OdeSystem(variant=v)
        models.append(
            ParametricModel(
                name=f"M{v}",
                design_space=design,
                parameter_space=params,
                output_dim=2,
                evaluator=_cs2_single(system),
                batch_evaluator=_cs2_batch(system),
            )
        )
    noise = NoiseModel(9.0e-4 * np.eye(2))
    return CaseStudy(
        name=f"case2-{n_models}model",
        models=models,
        noise=noise,
        design_space=design,
        generator_index=0,
        sample_true_theta=sample_cs2_true_theta,
        n0_default=20,
        budget_default=100,
    )
