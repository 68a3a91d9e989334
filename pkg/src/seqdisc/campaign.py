"""Sequential design campaign: the propose/observe loop as a state machine."""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import discrimination as dc
from .case_studies import CaseStudy, builtin_case_study_1, builtin_case_study_2
from .discrimination import CriterionInputs, DiscriminationState
from .exceptions import (
    CampaignTerminated,
    IndiscriminableTermination,
    InsufficientData,
    OutOfBounds,
)
from .marginal import (
    ParameterPosterior,
    fit_parameters,
    laplace_covariance,
    marginal_predict,
)
from .models import ExperimentDataset
from .sampling import sample_box
from .surrogate import ModelSurrogate, default_n_sim

SCHEMA_VERSION = 1

_CASE_BUILDERS = {
    "1": builtin_case_study_1,
    "2": lambda: builtin_case_study_2(4),
    "2-3": lambda: builtin_case_study_2(3),
}


def load_case(case_id: str) -> CaseStudy:
    try:
        return _CASE_BUILDERS[case_id]()
    except KeyError:
        raise ValueError(f"unknown case id {case_id!r}") from None


@dataclass
class CampaignConfig:
    """Everything a campaign needs besides the data."""

    case: str = "1"
    design_criterion: str = "bh"  # bh | bf | aw | uniform
    md: str = "pi"  # pi | chi2 | aic
    taylor_order: int = 1
    budget: int = 40
    seed: int = 0
    n0: int = 5
    decision_threshold: float = 0.999
    chi2_alpha: float = 0.05
    n_sim: int | None = None
    kernel: str = "rbf"
    surrogate_restarts: int = 3
    surrogate_refit_restarts: int = 1
    surrogate_max_iter: int = 150
    sim_scheme: str = "lhs"
    sim_theta_frac: float | None = 0.05
    fit_starts: int = 10
    fit_refit_starts: int = 2
    fit_maxfev_per_dim: int = 300
    fit_refit_maxfev_per_dim: int = 150
    candidate_batch: int = 256
    refine_starts: int = 4

    def __post_init__(self):
        if self.design_criterion not in dc.DESIGN_CRITERIA:
            raise ValueError(f"bad design criterion {self.design_criterion!r}")
        if self.md not in dc.DISCRIMINATION_CRITERIA:
            raise ValueError(f"bad discrimination criterion {self.md!r}")
        if self.taylor_order not in (1, 2):
            raise ValueError("taylor_order must be 1 or 2")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        return cls(**d)


class Campaign:
    """Single-writer campaign state over one case study."""

    def __init__(self, case: CaseStudy, config: CampaignConfig):
        self.case = case
        self.config = config
        self.data = ExperimentDataset(case.design_space, case.noise.dim)
        self.posteriors: list[ParameterPosterior] = []
        self.surrogates: list[ModelSurrogate] = []
        self.disc = DiscriminationState.uniform(len(case.models))
        self.history: list[dict] = []
        self.round_ = 0
        self._initialized = False

    # -- seeding -----------------------------------------------------------

    def _rng(self, *salt: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.config.seed, *salt])
        )

    # -- lifecycle ---------------------------------------------------------

    @property
    def status(self) -> str:
        return self.disc.status

    @property
    def n_models(self) -> int:
        return len(self.case.models)

    def initialize(self, initial_data: ExperimentDataset) -> "Campaign":
        """Fit parameters, build surrogates and evaluate the initial state."""
        if len(initial_data) < 1:
            raise ValueError("initial data must be non-empty")
        self.data = initial_data
        self._refit(first=True)
        self._update_statistics()
        dc.check_termination(
            self.disc,
            self.config.md,
            rounds_used=0,
            budget=self.config.budget,
            decision_threshold=self.config.decision_threshold,
        )
        self._initialized = True
        return self

    def sample_initial_data(
        self, true_theta: np.ndarray, n0: int | None = None
    ) -> ExperimentDataset:
        """Synthesise N0 noisy observations from the case's generator model."""
        n0 = self.config.n0 if n0 is None else n0
        rng = self._rng(0)
        X = sample_box(self.case.design_space.bounds, n0, rng, scheme="uniform")
        gen = self.case.generator
        Y = gen.evaluate_batch(X, np.asarray(true_theta, float))
        Y = Y + self.case.noise.sample(rng, n0)
        ds = ExperimentDataset(self.case.design_space, self.case.noise.dim)
        for x, y in zip(X, Y):
            ds.append(x, y, tag="initial")
        return ds

    # -- refitting ---------------------------------------------------------

    def _refit(self, first: bool = False) -> None:
        cfg = self.config
        new_posteriors, new_surrogates = [], []
        for i, model in enumerate(self.case.models):
            warm_theta = None if first else self.posteriors[i].theta_hat
            theta_hat, sse = fit_parameters(
                model,
                self.data,
                self.case.noise,
                rng=self._rng(self.round_, 1, i),
                n_starts=cfg.fit_starts if first else cfg.fit_refit_starts,
                maxfev_per_dim=(
                    cfg.fit_maxfev_per_dim
                    if first
                    else cfg.fit_refit_maxfev_per_dim
                ),
                warm_start=warm_theta,
            )
            n_sim = cfg.n_sim or default_n_sim(
                model.design_space.dim + model.n_params
            )
            surr = ModelSurrogate.build(
                model,
                n_sim=n_sim,
                rng=self._rng(self.round_, 2, i),
                kernel=cfg.kernel,
                n_restarts=(
                    cfg.surrogate_restarts if first else cfg.surrogate_refit_restarts
                ),
                scheme=cfg.sim_scheme,
                max_iter=cfg.surrogate_max_iter,
                warm_from=None if first else self.surrogates[i],
                theta_center=theta_hat,
                theta_frac=cfg.sim_theta_frac,
            )
            cov = laplace_covariance(surr, theta_hat, self.data, self.case.noise)
            new_posteriors.append(ParameterPosterior(theta_hat, cov, sse))
            new_surrogates.append(surr)
        self.posteriors = new_posteriors
        self.surrogates = new_surrogates

    def _update_statistics(self) -> None:
        """Recompute chi2 adequacy and AIC/Akaike weights on all data."""
        noise = self.case.noise
        for i, model in enumerate(self.case.models):
            try:
                stat, _, passed = dc.chi2_test(
                    model,
                    self.data,
                    self.posteriors[i].theta_hat,
                    noise,
                    alpha=self.config.chi2_alpha,
                )
                self.disc.chi2_stats[i] = stat
                self.disc.chi2_pass[i] = passed
            except InsufficientData:
                self.disc.chi2_stats[i] = np.nan
                self.disc.chi2_pass[i] = True
        mus, covs = self.predictive_moments(self.data.X, include_noise=True)
        loglik = np.array(
            [
                sum(
                    dc.gaussian_logpdf(y, mus[i, n], covs[i, n])
                    for n, y in enumerate(self.data.Y)
                )
                for i in range(self.n_models)
            ]
        )
        self.disc.aic = np.array(
            [
                dc.aic_from_loglik(loglik[i], self.case.models[i].n_params)
                for i in range(self.n_models)
            ]
        )
        self.disc.weights = dc.akaike_weights(self.disc.aic)

    # -- marginal predictions ----------------------------------------------

    def predictive_moments(
        self, X: np.ndarray, include_noise: bool = True
    ) -> tuple[np.ndarray, np.ndarray]:
        """Per-model marginal predictive moments at rows of X.

        Returns (mus (M, B, E), covs (M, B, E, E)).
        """
        X = np.atleast_2d(np.asarray(X, float))
        mus, covs = [], []
        for i in range(self.n_models):
            mu, cov = marginal_predict(
                self.surrogates[i],
                self.posteriors[i],
                X,
                order=self.config.taylor_order,
            )
            if include_noise:
                cov = cov + self.case.noise.covariance
            mus.append(mu)
            covs.append(cov)
        return np.stack(mus), np.stack(covs)

    # -- design ------------------------------------------------------------

    def _active_models(self) -> np.ndarray:
        if self.config.md == "chi2":
            active = np.flatnonzero(self.disc.chi2_pass)
            if active.size >= 2:
                return active
        return np.arange(self.n_models)

    def _criterion_values(self, X: np.ndarray, active: np.ndarray) -> np.ndarray:
        mus, covs = self.predictive_moments(X)
        priors = self.disc.posteriors[active]
        priors = priors / priors.sum()
        n_params = np.array([self.case.models[i].n_params for i in active])
        crit = self.config.design_criterion
        vals = np.empty(X.shape[0])
        for b in range(X.shape[0]):
            inputs = CriterionInputs(
                mus=mus[active, b],
                covs=covs[active, b],
                n_params=n_params,
                priors=priors,
            )
            if crit == "bh":
                vals[b] = dc.design_bh(inputs)
            elif crit == "bf":
                vals[b] = dc.design_bf(inputs, self.case.noise)
            else:
                vals[b] = dc.design_aw(inputs)
        return vals

    def propose(self) -> tuple[np.ndarray, float]:
        """Maximise the design criterion over the design box."""
        if not self._initialized:
            raise RuntimeError("campaign not initialized")
        if self.status != "ongoing":
            raise CampaignTerminated(f"campaign is {self.status}")
        t0 = time.monotonic()
        cfg = self.config
        box = self.case.design_space
        rng = self._rng(self.round_, 3)
        if cfg.design_criterion == "uniform":
            x_star = rng.uniform(box.lower, box.upper)
            value = 0.0  # keeps downstream JSON/CSV strictly numeric
        else:
            active = self._active_models()
            cand = sample_box(box.bounds, cfg.candidate_batch, rng, scheme="sobol")
            vals = self._criterion_values(cand, active)
            order = np.argsort(-vals, kind="stable")
            best_x = cand[order[0]]
            best_v = vals[order[0]]
            for idx in order[: cfg.refine_starts]:
                res = minimize(
                    lambda x: -self._criterion_values(
                        box.clip(x)[None, :], active
                    )[0],
                    cand[idx],
                    method="Nelder-Mead",
                    options={"maxfev": 60 * box.dim, "xatol": 1e-4},
                )
                if np.isfinite(res.fun) and -res.fun > best_v:
                    best_v = -res.fun
                    best_x = box.clip(res.x)
            x_star, value = best_x, float(best_v)
            if cfg.design_criterion == "bf" and value < self.case.noise.dim:
                self.disc.status = "all-rejected"
                raise IndiscriminableTermination(
                    f"max D_BF = {value:.4f} < E = {self.case.noise.dim}"
                )
        self.history.append(
            {
                "event": "proposal",
                "round": self.round_,
                "x_star": np.asarray(x_star).tolist(),
                "criterion": cfg.design_criterion,
                "criterion_value": value,
                "wall_clock": time.monotonic() - t0,
            }
        )
        return np.asarray(x_star, float), value

    # -- observation -------------------------------------------------------

    def observe(self, x: np.ndarray, y: np.ndarray) -> "Campaign":
        """Ingest one observation, refit everything, update discrimination."""
        if not self._initialized:
            raise RuntimeError("campaign not initialized")
        if self.status != "ongoing":
            raise CampaignTerminated(f"campaign is {self.status}")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not self.case.design_space.contains(x):
            raise OutOfBounds(f"x={x} outside design box")
        # Bayes factor uses the predictive built from the data BEFORE y
        mus, covs = self.predictive_moments(x[None, :])
        try:
            self.disc.posteriors = dc.update_posteriors(
                self.disc.posteriors, y, mus[:, 0], covs[:, 0]
            )
        except dc.AllLikelihoodsZero:
            self.disc.likelihood_underflow = True
        self.data.append(x, y, tag="designed")
        self.round_ += 1
        self._refit(first=False)
        self._update_statistics()
        dc.check_termination(
            self.disc,
            self.config.md,
            rounds_used=self.round_,
            budget=self.config.budget,
            decision_threshold=self.config.decision_threshold,
        )
        last_prop = next(
            (
                h
                for h in reversed(self.history)
                if h["event"] == "proposal"
            ),
            None,
        )
        self.history.append(
            {
                "event": "observation",
                "round": self.round_,
                "x": x.tolist(),
                "y": y.tolist(),
                "criterion": self.config.design_criterion,
                "criterion_value": (
                    last_prop["criterion_value"] if last_prop else float("nan")
                ),
                "pi": self.disc.posteriors.tolist(),
                "w": self.disc.weights.tolist(),
                "chi2_pass": self.disc.chi2_pass.tolist(),
                "status": self.disc.status,
            }
        )
        return self

    # -- closed loop -------------------------------------------------------

    def run_closed_loop(self, true_theta: np.ndarray) -> list[dict]:
        """Propose/synthesise/observe until a terminal status is reached."""
        gen = self.case.generator
        true_theta = np.asarray(true_theta, float)
        while self.status == "ongoing":
            try:
                x_star, _ = self.propose()
            except IndiscriminableTermination:
                break
            rng = self._rng(self.round_, 5)
            y = gen.evaluate_batch(x_star[None, :], true_theta)[0]
            y = y + self.case.noise.sample(rng, 1)[0]
            self.observe(x_star, y)
        return [h for h in self.history if h["event"] == "observation"]

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "data": self.data.to_records(),
            "posteriors": [p.to_dict() for p in self.posteriors],
            "discrimination": self.disc.to_dict(),
            "history": self.history,
            "round": self.round_,
            "initialized": self._initialized,
            "model_names": [m.name for m in self.case.models],
        }

    def save(self, path: str | Path) -> None:
        """Atomic write: campaign.json plus a sibling surrogate directory."""
        path = Path(path)
        doc = self.to_dict()
        surr_dir = path.with_name(path.stem + "_surrogates")
        surr_dir.mkdir(parents=True, exist_ok=True)
        for i, surr in enumerate(self.surrogates):
            tmp = surr_dir / f".model_{i}.json.tmp"
            tmp.write_text(json.dumps(surr.checkpoint()))
            os.replace(tmp, surr_dir / f"model_{i}.json")
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(doc, indent=1))
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path) -> "Campaign":
        path = Path(path)
        doc = json.loads(path.read_text())
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("unsupported campaign schema version")
        config = CampaignConfig.from_dict(doc["config"])
        case = load_case(config.case)
        camp = cls(case, config)
        camp.data = ExperimentDataset.from_records(
            case.design_space, case.noise.dim, doc["data"]
        )
        camp.posteriors = [
            ParameterPosterior.from_dict(p) for p in doc["posteriors"]
        ]
        camp.disc = DiscriminationState.from_dict(doc["discrimination"])
        camp.history = doc["history"]
        camp.round_ = doc["round"]
        camp._initialized = doc["initialized"]
        surr_dir = path.with_name(path.stem + "_surrogates")
        camp.surrogates = [
            ModelSurrogate.from_checkpoint(
                case.models[i],
                json.loads((surr_dir / f"model_{i}.json").read_text()),
            )
            for i in range(len(case.models))
        ]
        return camp

    def trace_rows(self) -> list[dict]:
        return [h for h in self.history if h["event"] == "observation"]


def trace_to_csv(campaign: Campaign, path: str | Path) -> None:
    """Write the observation trace with 17-significant-digit numbers."""
    import csv

    d = campaign.case.design_space.dim
    E = campaign.case.noise.dim
    M = campaign.n_models
    cols = (
        ["round"]
        + [f"x{i + 1}" for i in range(d)]
        + [f"y{i + 1}" for i in range(E)]
        + ["criterion", "criterion_value"]
        + [f"pi{i + 1}" for i in range(M)]
        + [f"w{i + 1}" for i in range(M)]
        + [f"chi2_pass{i + 1}" for i in range(M)]
        + ["status"]
    )

    def fmt(v: float) -> str:
        return format(float(v), ".17g")

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in campaign.trace_rows():
            writer.writerow(
                [row["round"]]
                + [fmt(v) for v in row["x"]]
                + [fmt(v) for v in row["y"]]
                + [row["criterion"], fmt(row["criterion_value"])]
                + [fmt(v) for v in row["pi"]]
                + [fmt(v) for v in row["w"]]
                + [int(b) for b in row["chi2_pass"]]
                + [row["status"]]
            )
