"""Gaussian-process surrogates over z = [x, theta] with analytic derivatives.

One scalar GP per (model, output dimension). Inputs are standardised to
[0, 1] per dimension using the box bounds; targets are centred and scaled
per output. Hyperparameters are point estimates from evidence maximisation
(L-BFGS-B on log-hyperparameters with analytic gradients, multistart).
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla
from scipy.optimize import minimize
from sklearn.base import BaseEstimator

from . import kernels
from .exceptions import TrainingFailure
from .models import ParametricModel
from .sampling import sample_design

_LOG_LAM_BOUNDS = (np.log(1e-2), np.log(1e2))
_LOG_RHO2_BOUNDS = (-6.0, 6.0)
_LOG_JITTER_BOUNDS = (-12.0, -4.0)


def default_n_sim(d_prime: int) -> int:
    """Simulated-dataset size heuristic: 60 per input dimension, capped."""
    return min(60 * d_prime, 1200)


class SurrogateGP(BaseEstimator):
    """Scalar-output GP regressor with derivative predictions.

    Parameters
    ----------
    input_bounds : array (D, 2)
        Box used to standardise inputs; hyperparameters live in the
        standardised space.
    kernel : {"rbf", "matern52"}
    n_restarts : int
        Number of random multistarts for evidence maximisation (a warm
        start supplied to :meth:`fit` counts extra).
    max_iter : int
        L-BFGS-B iteration cap per start.
    random_state : int or numpy Generator
    """

    def __init__(
        self,
        input_bounds=None,
        kernel: str = "rbf",
        n_restarts: int = 5,
        max_iter: int = 200,
        random_state=None,
    ):
        self.input_bounds = input_bounds
        self.kernel = kernel
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.random_state = random_state

    # -- standardisation ---------------------------------------------------

    def _standardise_inputs(self, Z: np.ndarray) -> np.ndarray:
        return (Z - self._lo) / self._span

    # -- evidence ----------------------------------------------------------

    def _neg_evidence(self, logp, Q, ys):
        """Negative log marginal likelihood and gradient in log-hyperparams.

        logp = [log rho2, log lam_1..D, log jitter]; Q is the (D, N, N)
        stack of per-dimension squared distances of standardised inputs.
        """
        D, N = Q.shape[0], Q.shape[1]
        rho2 = np.exp(logp[0])
        lam2 = np.exp(2.0 * logp[1 : 1 + D])
        jit = np.exp(logp[-1])
        q = np.tensordot(1.0 / lam2, Q, axes=1)
        if self.kernel == "rbf":
            Kf = rho2 * np.exp(-0.5 * q)
            dfac = Kf  # dK/dlog lam_j = dfac * Q_j / lam_j^2
        else:
            u = np.sqrt(5.0 * q)
            eu = np.exp(-u)
            Kf = rho2 * (1.0 + u + u * u / 3.0) * eu
            dfac = (5.0 / 3.0) * rho2 * (1.0 + u) * eu
        K = Kf + jit * np.eye(N)
        try:
            L = sla.cholesky(K, lower=True)
        except sla.LinAlgError:
            return 1e25, np.zeros_like(logp)
        alpha = sla.cho_solve((L, True), ys)
        nll = (
            0.5 * float(ys @ alpha)
            + float(np.sum(np.log(np.diag(L))))
            + 0.5 * N * np.log(2.0 * np.pi)
        )
        Kinv = sla.cho_solve((L, True), np.eye(N))
        # W = alpha alpha^T - K^{-1}; dnll/dh = -0.5 tr(W dK/dh)
        W = np.outer(alpha, alpha) - Kinv
        grad = np.empty_like(logp)
        grad[0] = -0.5 * float(np.sum(W * Kf))
        WD = W * dfac
        for j in range(D):
            grad[1 + j] = -0.5 * float(np.sum(WD * Q[j]) / lam2[j])
        grad[-1] = -0.5 * jit * float(np.trace(W))
        return nll, grad

    # -- fitting -----------------------------------------------------------

    def fit(self, Z, y, warm_start=None, fixed_logp=None):
        """Train on noise-free targets y at inputs Z.

        ``warm_start`` adds one start at the given log-hyperparameters;
        ``fixed_logp`` skips optimisation entirely (checkpoint reload).
        """
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if Z.shape[0] != y.size:
            raise ValueError("Z and y disagree on sample count")
        bounds = np.asarray(self.input_bounds, dtype=float)
        if bounds.shape != (Z.shape[1], 2):
            raise ValueError("input_bounds must have shape (D, 2)")
        self._lo = bounds[:, 0]
        self._span = bounds[:, 1] - bounds[:, 0]
        self.Z_train_ = Z
        Zs = self._standardise_inputs(Z)
        self.y_mean_ = float(np.mean(y))
        sd = float(np.std(y))
        self.y_std_ = sd if sd > 1e-12 else 1.0
        ys = (y - self.y_mean_) / self.y_std_
        self._Zs = Zs
        self._ys = ys
        D = Z.shape[1]

        if fixed_logp is not None:
            best_logp = np.asarray(fixed_logp, dtype=float)
            best_val = self._neg_evidence(
                best_logp, self._sqdist_stack(Zs), ys
            )[0]
        else:
            Q = self._sqdist_stack(Zs)
            rng = (
                self.random_state
                if isinstance(self.random_state, np.random.Generator)
                else np.random.default_rng(self.random_state)
            )
            starts = []
            if warm_start is not None:
                starts.append(np.asarray(warm_start, dtype=float))
            for _ in range(self.n_restarts):
                s = np.empty(D + 2)
                s[0] = rng.uniform(-1.0, 1.0)
                s[1 : 1 + D] = rng.uniform(np.log(0.05), np.log(2.0), size=D)
                s[-1] = rng.uniform(-10.0, -6.0)
                starts.append(s)
            opt_bounds = (
                [_LOG_RHO2_BOUNDS]
                + [_LOG_LAM_BOUNDS] * D
                + [_LOG_JITTER_BOUNDS]
            )
            best_val, best_logp = np.inf, None
            for s0 in starts:
                s0 = np.clip(
                    s0,
                    [b[0] for b in opt_bounds],
                    [b[1] for b in opt_bounds],
                )
                res = minimize(
                    self._neg_evidence,
                    s0,
                    args=(Q, ys),
                    jac=True,
                    method="L-BFGS-B",
                    bounds=opt_bounds,
                    options={"maxiter": self.max_iter},
                )
                if np.isfinite(res.fun) and res.fun < best_val:
                    best_val, best_logp = float(res.fun), res.x.copy()
            if best_logp is None or best_val >= 1e24:
                raise TrainingFailure("all evidence-maximisation starts failed")

        self.logp_ = best_logp
        self.log_evidence_ = -best_val
        self.kernel_ = kernels.Kernel(
            family=self.kernel,
            rho2=float(np.exp(best_logp[0])),
            lengthscales=np.exp(best_logp[1 : 1 + D]),
            jitter=float(np.exp(best_logp[-1])),
        )
        K = kernels.gram(self.kernel_, Zs)
        try:
            self.L_ = sla.cholesky(K, lower=True)
        except sla.LinAlgError as exc:
            raise TrainingFailure(f"final Cholesky failed: {exc}") from exc
        self.alpha_ = sla.cho_solve((self.L_, True), ys)
        return self

    @staticmethod
    def _sqdist_stack(Zs: np.ndarray) -> np.ndarray:
        D = Zs.shape[1]
        diff = Zs[:, None, :] - Zs[None, :, :]
        return np.ascontiguousarray(np.moveaxis(diff**2, 2, 0)).reshape(
            D, Zs.shape[0], Zs.shape[0]
        )

    # -- prediction --------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "kernel_"):
            raise RuntimeError("SurrogateGP is not fitted")

    def predict(self, Z, return_var: bool = False):
        """Posterior mean (and variance) at rows of Z, in original units."""
        self._check_fitted()
        Zs = self._standardise_inputs(np.atleast_2d(np.asarray(Z, float)))
        ks = kernels.cross(self.kernel_, Zs, self._Zs)
        mu = self.y_mean_ + self.y_std_ * (ks @ self.alpha_)
        if not return_var:
            return mu
        v = sla.cho_solve((self.L_, True), ks.T)
        var_s = self.kernel_.rho2 - np.einsum("bn,nb->b", ks, v)
        var = np.maximum(var_s, 0.0) * self.y_std_**2
        return mu, var

    def predict_derivatives(self, Z, dims, order: int = 1):
        """Mean/variance and their derivatives in the selected input dims.

        Returns a dict with mu (B,), var (B,), dmu (B,t), dvar (B,t) and,
        for order 2, d2mu (B,t,t), d2var (B,t,t). Derivatives are with
        respect to the ORIGINAL (unstandardised) coordinates.
        """
        self._check_fitted()
        Z = np.atleast_2d(np.asarray(Z, float))
        dims = np.asarray(dims, dtype=int)
        Zs = self._standardise_inputs(Z)
        chain = 1.0 / self._span[dims]
        if order == 1:
            ks, G = kernels.cross_grad(self.kernel_, Zs, self._Zs, dims)
            H = None
        elif order == 2:
            ks, G, H = kernels.cross_hess(self.kernel_, Zs, self._Zs, dims)
        else:
            raise ValueError("order must be 1 or 2")
        B, N, t = G.shape
        v = sla.cho_solve((self.L_, True), ks.T)  # (N, B)
        mu = self.y_mean_ + self.y_std_ * (ks @ self.alpha_)
        var = np.maximum(
            self.kernel_.rho2 - np.einsum("bn,nb->b", ks, v), 0.0
        ) * self.y_std_**2
        dmu = self.y_std_ * np.einsum("bnt,n->bt", G, self.alpha_) * chain
        dvar = (
            -2.0
            * np.einsum("bnt,nb->bt", G, v)
            * chain
            * self.y_std_**2
        )
        out = {"mu": mu, "var": var, "dmu": dmu, "dvar": dvar}
        if order == 2:
            d2mu = (
                self.y_std_
                * np.einsum("bnjk,n->bjk", H, self.alpha_)
                * np.outer(chain, chain)
            )
            # K^{-1} G for every candidate, solved as one stacked system
            Gflat = G.transpose(1, 0, 2).reshape(N, B * t)
            KG = sla.cho_solve((self.L_, True), Gflat).reshape(N, B, t)
            GtKG = np.einsum("bnj,nbk->bjk", G, KG)
            vH = np.einsum("nb,bnjk->bjk", v, H)
            d2var = (
                -2.0 * (GtKG + vH) * np.outer(chain, chain) * self.y_std_**2
            )
            out["d2mu"] = d2mu
            out["d2var"] = 0.5 * (d2var + d2var.transpose(0, 2, 1))
        return out

    # -- persistence -------------------------------------------------------

    def checkpoint(self) -> dict:
        self._check_fitted()
        return {
            "kernel": self.kernel,
            "input_bounds": np.asarray(self.input_bounds, float).tolist(),
            "logp": self.logp_.tolist(),
            "log_evidence": self.log_evidence_,
        }


class ModelSurrogate:
    """Bundle of per-output GPs for one parametric model."""

    def __init__(self, model: ParametricModel, gps: list[SurrogateGP], Z, F):
        self.model = model
        self.gps = gps
        self.Z = Z
        self.F = F
        d = model.design_space.dim
        self.theta_dims = np.arange(d, d + model.n_params)

    @classmethod
    def build(
        cls,
        model: ParametricModel,
        n_sim: int,
        rng: np.random.Generator,
        kernel: str = "rbf",
        n_restarts: int = 5,
        scheme: str = "lhs",
        max_iter: int = 200,
        warm_from: "ModelSurrogate | None" = None,
        theta_center: np.ndarray | None = None,
        theta_frac: float | None = None,
    ) -> "ModelSurrogate":
        """Sample a fresh simulated dataset and train all output GPs.

        With ``theta_center`` and ``theta_frac`` set, the parameter block is
        sampled from a window of half-width theta_frac * (box width) around
        the centre, clipped to the parameter box. All downstream Taylor
        quantities are evaluated at the fitted parameters, so a local
        surrogate concentrates the sample budget where accuracy matters.
        """
        param_bounds = model.parameter_space.bounds
        if theta_center is not None and theta_frac is not None:
            width = param_bounds[:, 1] - param_bounds[:, 0]
            c = np.asarray(theta_center, float)
            lo = np.maximum(c - theta_frac * width, param_bounds[:, 0])
            hi = np.minimum(c + theta_frac * width, param_bounds[:, 1])
            param_bounds = np.column_stack([lo, hi])
        Z = sample_design(
            model.design_space.bounds, param_bounds, n_sim, rng, scheme
        )
        d = model.design_space.dim
        F = model.evaluate_batch(Z[:, :d], Z[:, d:])
        bounds = np.vstack([model.design_space.bounds, param_bounds])
        gps = []
        for e in range(model.output_dim):
            gp = SurrogateGP(
                input_bounds=bounds,
                kernel=kernel,
                n_restarts=n_restarts,
                max_iter=max_iter,
                random_state=np.random.default_rng(rng.integers(2**63)),
            )
            warm = None
            if warm_from is not None and hasattr(warm_from.gps[e], "logp_"):
                warm = warm_from.gps[e].logp_
            gp.fit(Z, F[:, e], warm_start=warm)
            gps.append(gp)
        return cls(model, gps, Z, F)

    # -- batched per-output predictions ------------------------------------

    def predict(self, X: np.ndarray, theta: np.ndarray):
        """Per-output (mu, var) at design rows X with fixed theta."""
        Zq = self._query(X, theta)
        mus, vars_ = [], []
        for gp in self.gps:
            m, v = gp.predict(Zq, return_var=True)
            mus.append(m)
            vars_.append(v)
        return np.stack(mus, axis=1), np.stack(vars_, axis=1)

    def predict_derivatives(self, X: np.ndarray, theta: np.ndarray, order: int = 1):
        """Stacked per-output derivative predictions at (X, theta).

        Shapes: mu/var (B, E); dmu/dvar (B, E, D_i); order 2 adds
        d2mu/d2var (B, E, D_i, D_i).
        """
        Zq = self._query(X, theta)
        parts = [
            gp.predict_derivatives(Zq, self.theta_dims, order=order)
            for gp in self.gps
        ]
        out = {
            key: np.stack([p[key] for p in parts], axis=1)
            for key in parts[0]
        }
        return out

    def _query(self, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        theta = np.asarray(theta, float)
        return np.hstack([X, np.broadcast_to(theta, (X.shape[0], theta.size))])

    # -- persistence -------------------------------------------------------

    def checkpoint(self) -> dict:
        return {
            "Z": self.Z.tolist(),
            "F": self.F.tolist(),
            "gps": [gp.checkpoint() for gp in self.gps],
        }

    @classmethod
    def from_checkpoint(cls, model: ParametricModel, doc: dict) -> "ModelSurrogate":
        Z = np.array(doc["Z"])
        F = np.array(doc["F"])
        gps = []
        for e, gdoc in enumerate(doc["gps"]):
            gp = SurrogateGP(
                input_bounds=np.array(gdoc["input_bounds"]),
                kernel=gdoc["kernel"],
            )
            gp.fit(Z, F[:, e], fixed_logp=np.array(gdoc["logp"]))
            gps.append(gp)
        return cls(model, gps, Z, F)
