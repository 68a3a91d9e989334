"""Parameter estimation, Laplace posterior, and Taylor-marginalised predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .exceptions import EvaluationFailure, FitFailure, SingularInformation
from .models import ExperimentDataset, NoiseModel, ParametricModel
from .sampling import sample_box
from .surrogate import ModelSurrogate


@dataclass
class ParameterPosterior:
    """Gaussian approximation of p(theta | data) at the best-fit point."""

    theta_hat: np.ndarray
    cov: np.ndarray
    residual: float  # weighted SSE at theta_hat

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.tolist(),
            "cov": self.cov.tolist(),
            "residual": float(self.residual),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterPosterior":
        return cls(np.array(d["theta_hat"]), np.array(d["cov"]), d["residual"])


@dataclass
class MarginalPrediction:
    """Per-model predictive N(mu, cov) with parameter uncertainty folded in."""

    mu: np.ndarray
    cov: np.ndarray
    taylor_order: int


def weighted_sse(
    model: ParametricModel,
    data: ExperimentDataset,
    noise: NoiseModel,
    theta: np.ndarray,
) -> float:
    """Sum over data of (y - f)^T Sigma_exp^{-1} (y - f)."""
    R = data.Y - model.evaluate_batch(data.X, np.asarray(theta, float))
    return float(np.einsum("ne,ef,nf->", R, noise.inverse, R))


def fit_parameters(
    model: ParametricModel,
    data: ExperimentDataset,
    noise: NoiseModel,
    rng: np.random.Generator,
    n_starts: int = 10,
    maxfev_per_dim: int = 300,
    warm_start: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Multistart Nelder-Mead weighted least squares on the original model.

    Returns (theta_hat, weighted SSE at theta_hat). Starts are Latin-
    hypercube draws over the parameter box, preceded by ``warm_start``
    when given. Iterates are projected into the box.
    """
    if len(data) < 1:
        raise ValueError("need at least one observation")
    box = model.parameter_space

    def objective(theta):
        try:
            return weighted_sse(model, data, noise, box.clip(theta))
        except EvaluationFailure:
            return 1e30

    starts = []
    if warm_start is not None:
        starts.append(box.clip(np.asarray(warm_start, float)))
    starts.extend(sample_box(box.bounds, n_starts, rng, scheme="lhs"))
    maxfev = maxfev_per_dim * box.dim
    best_val, best_theta = np.inf, None
    for s0 in starts:
        res = minimize(
            objective,
            s0,
            method="Nelder-Mead",
            options={"maxfev": maxfev, "xatol": 1e-8, "fatol": 1e-10},
        )
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val, best_theta = float(res.fun), box.clip(res.x)
    if best_theta is None or best_val >= 1e29:
        raise FitFailure(f"{model.name}: no start produced a finite objective")
    return best_theta, best_val


def laplace_covariance_from_jacobians(
    J: np.ndarray, noise: NoiseModel, ridge: float | str = "auto"
) -> np.ndarray:
    """Invert the accumulated Fisher information of mean Jacobians.

    J has shape (N, E, D). ``ridge="auto"`` adds 1e-8 * trace/D on the
    diagonal before inversion; pass 0 for the unregularised inverse.
    """
    info = np.einsum("nei,ef,nfj->ij", J, noise.inverse, J)
    D = info.shape[0]
    if ridge == "auto":
        delta = 1e-8 * np.trace(info) / D
    else:
        delta = float(ridge)
    reg = info + delta * np.eye(D)
    try:
        cov = np.linalg.inv(reg)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation(str(exc)) from exc
    if not np.all(np.isfinite(cov)):
        raise SingularInformation("information matrix numerically singular")
    return 0.5 * (cov + cov.T)


def laplace_covariance(
    surrogate: ModelSurrogate,
    theta_hat: np.ndarray,
    data: ExperimentDataset,
    noise: NoiseModel,
    ridge: float | str = "auto",
) -> np.ndarray:
    """Laplace parameter covariance from surrogate-mean Jacobians."""
    if len(data) < 1:
        raise ValueError("need at least one observation")
    der = surrogate.predict_derivatives(data.X, theta_hat, order=1)
    return laplace_covariance_from_jacobians(der["dmu"], noise, ridge)


def _floor_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrise and clip negative eigenvalues to zero."""
    cov = 0.5 * (cov + cov.transpose(0, 2, 1))
    w, V = np.linalg.eigh(cov)
    w = np.maximum(w, 0.0)
    return np.einsum("bij,bj,bkj->bik", V, w, V)


def marginal_predict(
    surrogate: ModelSurrogate,
    posterior: ParameterPosterior,
    X: np.ndarray,
    order: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Marginal predictive moments at design rows X, batched.

    Returns (mu (B, E), cov (B, E, E)). Order 1 keeps the GP variance on
    the diagonal and adds the Jacobian quadratic form; order 2 adds the
    trace corrections from the parameter-block Hessians of the surrogate
    mean and variance.
    """
    X = np.atleast_2d(np.asarray(X, float))
    St = posterior.cov
    der = surrogate.predict_derivatives(X, posterior.theta_hat, order=order)
    J = der["dmu"]  # (B, E, D)
    V1 = np.einsum("bei,ij,bfj->bef", J, St, J)
    if order == 1:
        E = der["mu"].shape[1]
        cov = V1 + der["var"][:, :, None] * np.eye(E)
        return der["mu"], cov
    Hmu = der["d2mu"]  # (B, E, D, D)
    Hvar = der["d2var"]
    mu = der["mu"] + 0.5 * np.einsum("beij,ji->be", Hmu, St)
    evar = der["var"] + 0.5 * np.einsum("beij,ji->be", Hvar, St)
    HS = np.einsum("beij,jk->beik", Hmu, St)  # (B, E, D, D)
    V2 = 0.5 * np.einsum("beij,bfji->bef", HS, HS)
    E = mu.shape[1]
    cov = V1 + V2 + evar[:, :, None] * np.eye(E)
    return mu, _floor_psd(cov)


def marginal_predict_t1(
    surrogate: ModelSurrogate, posterior: ParameterPosterior, x: np.ndarray
) -> MarginalPrediction:
    """First-order Taylor marginal predictive at a single design point."""
    mu, cov = marginal_predict(surrogate, posterior, np.atleast_2d(x), order=1)
    return MarginalPrediction(mu[0], cov[0], taylor_order=1)


def marginal_predict_t2(
    surrogate: ModelSurrogate, posterior: ParameterPosterior, x: np.ndarray
) -> MarginalPrediction:
    """Second-order Taylor marginal predictive at a single design point."""
    mu, cov = marginal_predict(surrogate, posterior, np.atleast_2d(x), order=2)
    return MarginalPrediction(mu[0], cov[0], taylor_order=2)
