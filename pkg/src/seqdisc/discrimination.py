"""Design criteria and model-discrimination statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.special import logsumexp
from scipy.stats import chi2 as chi2_dist

from .exceptions import (
    AllLikelihoodsZero,
    InsufficientData,
    SingularCovariance,
)
from .models import ExperimentDataset, NoiseModel, ParametricModel

# likelihood variance floor: keeps covariances invertible after clamping
VAR_FLOOR = 1e-12

DESIGN_CRITERIA = ("bh", "bf", "aw", "uniform")
DISCRIMINATION_CRITERIA = ("pi", "chi2", "aic")


@dataclass
class CriterionInputs:
    """Per-model predictive moments at one candidate design point.

    ``covs`` must already include the measurement-noise covariance,
    i.e. Sigma_i = Sigma_exp + Sigma_breve_i(x).
    """

    mus: np.ndarray  # (M, E)
    covs: np.ndarray  # (M, E, E)
    n_params: np.ndarray  # (M,)
    priors: np.ndarray  # (M,) current model probabilities

    def __post_init__(self):
        self.mus = np.atleast_2d(np.asarray(self.mus, float))
        self.covs = np.asarray(self.covs, float)
        self.n_params = np.asarray(self.n_params, int)
        self.priors = np.asarray(self.priors, float)
        if abs(self.priors.sum() - 1.0) > 1e-9 or np.any(self.priors < 0):
            raise ValueError("priors must be a probability vector")

    @property
    def n_models(self) -> int:
        return self.mus.shape[0]


def _inverses(covs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(covs)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from exc


def design_bh(inputs: CriterionInputs) -> float:
    """Entropy-bound criterion: probability-weighted double sum over pairs."""
    M, E = inputs.mus.shape
    if M < 2:
        raise ValueError("need at least two active models")
    inv = _inverses(inputs.covs)
    total = 0.0
    for i in range(M):
        for j in range(i + 1, M):
            d = inputs.mus[i] - inputs.mus[j]
            quad = d @ (inv[i] + inv[j]) @ d
            tr = np.trace(
                inputs.covs[i] @ inv[j] + inputs.covs[j] @ inv[i]
            ) - 2.0 * E
            # ordered pairs (i,j) and (j,i) contribute identically, so the
            # 1/2 prefactor cancels against the factor 2
            total += inputs.priors[i] * inputs.priors[j] * (quad + tr)
    return float(total)


def design_bf(inputs: CriterionInputs, noise: NoiseModel) -> float:
    """Worst-pair criterion; values below E signal indiscriminability."""
    M = inputs.n_models
    if M < 2:
        raise ValueError("need at least two active models")
    best = -np.inf
    for i in range(M):
        for j in range(i + 1, M):
            S = inputs.covs[i] + inputs.covs[j]
            try:
                Sinv = np.linalg.inv(S)
            except np.linalg.LinAlgError as exc:
                raise SingularCovariance(str(exc)) from exc
            d = inputs.mus[i] - inputs.mus[j]
            val = d @ Sinv @ d + np.trace(2.0 * noise.covariance @ Sinv)
            best = max(best, float(val))
    return best


def pointwise_akaike_weights(inputs: CriterionInputs) -> np.ndarray:
    """Akaike weights of the candidate-point predictive separations."""
    M = inputs.n_models
    inv = _inverses(inputs.covs)
    w = np.empty(M)
    for i in range(M):
        exps = np.empty(M)
        for j in range(M):
            d = inputs.mus[i] - inputs.mus[j]
            exps[j] = (
                -0.5 * d @ inv[i] @ d
                + inputs.n_params[i]
                - inputs.n_params[j]
            )
        w[i] = np.exp(-logsumexp(exps))
    return w


def design_aw(inputs: CriterionInputs) -> float:
    """Prior-weighted sum of pointwise Akaike weights."""
    if inputs.n_models < 2:
        raise ValueError("need at least two active models")
    return float(pointwise_akaike_weights(inputs) @ inputs.priors)


def gaussian_logpdf(y: np.ndarray, mu: np.ndarray, cov: np.ndarray) -> float:
    """Multivariate normal log density with variance flooring."""
    E = y.size
    cov = cov + VAR_FLOOR * np.eye(E)
    try:
        L = sla.cholesky(cov, lower=True)
    except sla.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from exc
    r = sla.solve_triangular(L, y - mu, lower=True)
    return float(
        -0.5 * r @ r - np.sum(np.log(np.diag(L))) - 0.5 * E * np.log(2 * np.pi)
    )


def update_posteriors(
    priors: np.ndarray, y: np.ndarray, mus: np.ndarray, covs: np.ndarray
) -> np.ndarray:
    """Bayes update of model probabilities from one observation, in log space."""
    priors = np.asarray(priors, float)
    logpost = np.array(
        [
            gaussian_logpdf(np.asarray(y, float), mus[i], covs[i])
            for i in range(len(priors))
        ]
    )
    with np.errstate(divide="ignore"):
        logpost = logpost + np.log(priors)
    if np.all(np.isneginf(logpost)):
        raise AllLikelihoodsZero("all model likelihoods underflowed")
    return np.exp(logpost - logsumexp(logpost))


def chi2_test(
    model: ParametricModel,
    data: ExperimentDataset,
    theta_hat: np.ndarray,
    noise: NoiseModel,
    alpha: float = 0.05,
) -> tuple[float, int, bool]:
    """Adequacy test of the weighted residual sum at the best-fit parameters.

    Returns (statistic, degrees of freedom, pass flag); the null is that
    the model generated the data.
    """
    N, E, D = len(data), data.output_dim, model.n_params
    dof = N * E - D
    if dof <= 0:
        raise InsufficientData(f"NE={N * E} must exceed D={D}")
    R = data.Y - model.evaluate_batch(data.X, np.asarray(theta_hat, float))
    stat = float(np.einsum("ne,ef,nf->", R, noise.inverse, R))
    passed = stat <= chi2_dist.ppf(1.0 - alpha, dof)
    return stat, dof, bool(passed)


def akaike_weights(aic: np.ndarray) -> np.ndarray:
    """Normalised exp(-AIC/2), shifted by the minimum for stability."""
    aic = np.asarray(aic, float)
    if not np.all(np.isfinite(aic)):
        raise ValueError("all AIC values must be finite")
    ex = np.exp(-0.5 * (aic - aic.min()))
    return ex / ex.sum()


def aic_from_loglik(loglik: float, n_params: int) -> float:
    return -2.0 * loglik + 2.0 * n_params


@dataclass
class DiscriminationState:
    """Rolling model-discrimination statistics for one campaign."""

    posteriors: np.ndarray  # pi_i
    chi2_stats: np.ndarray
    chi2_pass: np.ndarray  # booleans
    aic: np.ndarray
    weights: np.ndarray  # Akaike weights w_i
    winner: int | None = None
    status: str = "ongoing"  # ongoing | decided | all-rejected | budget-exhausted
    likelihood_underflow: bool = False

    @classmethod
    def uniform(cls, n_models: int) -> "DiscriminationState":
        return cls(
            posteriors=np.full(n_models, 1.0 / n_models),
            chi2_stats=np.full(n_models, np.nan),
            chi2_pass=np.ones(n_models, dtype=bool),
            aic=np.full(n_models, np.nan),
            weights=np.full(n_models, 1.0 / n_models),
        )

    def to_dict(self) -> dict:
        return {
            "posteriors": self.posteriors.tolist(),
            "chi2_stats": self.chi2_stats.tolist(),
            "chi2_pass": self.chi2_pass.tolist(),
            "aic": self.aic.tolist(),
            "weights": self.weights.tolist(),
            "winner": self.winner,
            "status": self.status,
            "likelihood_underflow": self.likelihood_underflow,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiscriminationState":
        return cls(
            posteriors=np.array(d["posteriors"]),
            chi2_stats=np.array(d["chi2_stats"]),
            chi2_pass=np.array(d["chi2_pass"], dtype=bool),
            aic=np.array(d["aic"]),
            weights=np.array(d["weights"]),
            winner=d["winner"],
            status=d["status"],
            likelihood_underflow=d.get("likelihood_underflow", False),
        )


def check_termination(
    state: DiscriminationState,
    md: str,
    rounds_used: int,
    budget: int,
    decision_threshold: float = 0.999,
) -> DiscriminationState:
    """Apply the configured stopping rule and update status/winner in place."""
    if state.status != "ongoing":
        return state
    if md == "pi":
        if np.max(state.posteriors) >= decision_threshold:
            state.winner = int(np.argmax(state.posteriors))
            state.status = "decided"
    elif md == "chi2":
        n_pass = int(np.sum(state.chi2_pass))
        if n_pass == 1:
            state.winner = int(np.argmax(state.chi2_pass))
            state.status = "decided"
        elif n_pass == 0:
            state.status = "all-rejected"
    elif md == "aic":
        if np.max(state.weights) >= decision_threshold:
            state.winner = int(np.argmax(state.weights))
            state.status = "decided"
    else:
        raise ValueError(f"unknown discrimination criterion {md!r}")
    if state.status == "ongoing" and rounds_used >= budget:
        state.status = "budget-exhausted"
    return state
