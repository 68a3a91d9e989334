"""Replicated closed-loop benchmarks: outcome metrics over seeded campaigns."""

from __future__ import annotations

import csv
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .campaign import Campaign, CampaignConfig, load_case
from .case_studies import case_study_1_gradients
from .marginal import (
    ParameterPosterior,
    fit_parameters,
    laplace_covariance_from_jacobians,
)

METHODS = ("analytic", "gp-t1", "gp-t2")


class AnalyticCampaign(Campaign):
    """Classical route for case study 1: hand-coded model gradients, no GPs.

    Marginal predictive moments come straight from the model function and
    its analytic parameter Jacobian, so this is the surrogate-free
    reference the GP route is compared against.
    """

    def _refit(self, first: bool = False) -> None:
        cfg = self.config
        new_posteriors = []
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
            J = case_study_1_gradients(i + 1, self.data.X, theta_hat)
            cov = laplace_covariance_from_jacobians(J, self.case.noise)
            new_posteriors.append(ParameterPosterior(theta_hat, cov, sse))
        self.posteriors = new_posteriors
        self.surrogates = []

    def predictive_moments(self, X, include_noise: bool = True):
        X = np.atleast_2d(np.asarray(X, float))
        mus, covs = [], []
        for i, model in enumerate(self.case.models):
            th = self.posteriors[i].theta_hat
            mu = model.evaluate_batch(X, th)
            J = case_study_1_gradients(i + 1, X, th)
            cov = np.einsum("bei,ij,bfj->bef", J, self.posteriors[i].cov, J)
            if include_noise:
                cov = cov + self.case.noise.covariance
            mus.append(mu)
            covs.append(cov)
        return np.stack(mus), np.stack(covs)


def bench_config(
    case_id: str, dc: str, md: str, method: str, seed: int
) -> CampaignConfig:
    """Campaign settings tuned so desk-scale replicate counts stay tractable."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    taylor = 2 if method == "gp-t2" else 1
    common = dict(
        case=case_id,
        design_criterion=dc,
        md=md,
        taylor_order=taylor,
        seed=seed,
    )
    if case_id == "1":
        return CampaignConfig(
            n0=5,
            budget=40,
            n_sim=300,
            surrogate_restarts=3,
            surrogate_refit_restarts=1,
            fit_starts=8,
            fit_refit_starts=1,
            fit_maxfev_per_dim=300,
            fit_refit_maxfev_per_dim=150,
            **common,
        )
    return CampaignConfig(
        n0=20,
        budget=100,
        n_sim=400,
        surrogate_restarts=2,
        surrogate_refit_restarts=1,
        surrogate_max_iter=100,
        fit_starts=6,
        fit_refit_starts=1,
        fit_maxfev_per_dim=120,
        fit_refit_maxfev_per_dim=60,
        candidate_batch=192,
        refine_starts=2,
        **common,
    )


@dataclass
class CellResult:
    """Aggregated metrics for one (DC, MD, method) benchmark cell."""

    dc: str
    md: str
    method: str
    outcomes: list[str] = field(default_factory=list)  # S | F | I per replicate
    rounds: list[int] = field(default_factory=list)
    traces: list[list[dict]] = field(default_factory=list)
    crashes: list[str] = field(default_factory=list)

    @property
    def n_completed(self) -> int:
        return len(self.outcomes)

    def _rate(self, label: str) -> float:
        if not self.outcomes:
            return float("nan")
        return 100.0 * self.outcomes.count(label) / len(self.outcomes)

    @property
    def S(self) -> float:
        return self._rate("S")

    @property
    def F(self) -> float:
        return self._rate("F")

    @property
    def I(self) -> float:
        return self._rate("I")

    @property
    def A(self) -> float:
        """Mean additional experiments among successful replicates."""
        succ = [r for r, o in zip(self.rounds, self.outcomes) if o == "S"]
        return float(np.mean(succ)) if succ else float("nan")

    @property
    def SE(self) -> float:
        succ = [r for r, o in zip(self.rounds, self.outcomes) if o == "S"]
        if len(succ) < 2:
            return float("nan")
        return float(np.std(succ, ddof=1) / np.sqrt(len(succ)))

    def metrics(self) -> dict:
        return {
            "A": self.A,
            "SE": self.SE,
            "S": self.S,
            "F": self.F,
            "I": self.I,
            "n_completed": self.n_completed,
            "n_crashed": len(self.crashes),
        }


@dataclass
class BenchmarkResult:
    case: str
    replicates: int
    seed: int
    cells: dict[str, CellResult] = field(default_factory=dict)

    def to_markdown(self) -> str:
        keys = list(self.cells)
        lines = [
            "| metric | " + " | ".join(keys) + " |",
            "|---" * (len(keys) + 1) + "|",
        ]
        for metric in ("A", "SE", "S", "F", "I"):
            vals = [
                format(getattr(self.cells[k], metric), ".2f") for k in keys
            ]
            label = metric + (" [%]" if metric in ("S", "F", "I") else "")
            lines.append(f"| {label} | " + " | ".join(vals) + " |")
        return "\n".join(lines)


def replicate_seed(global_seed: int, replicate: int) -> int:
    """Stable per-replicate stream id from (global seed, replicate index)."""
    ss = np.random.SeedSequence([global_seed, replicate])
    return int(ss.generate_state(1)[0])


def run_replicate(
    case_id: str, dc: str, md: str, method: str, global_seed: int, replicate: int
) -> tuple[str, int, list[dict]]:
    """One seeded closed-loop campaign; returns (outcome, rounds, trace)."""
    rep_seed = replicate_seed(global_seed, replicate)
    case = load_case(case_id)
    config = bench_config(case_id, dc, md, method, rep_seed)
    cls = AnalyticCampaign if method == "analytic" else Campaign
    if method == "analytic" and case_id != "1":
        raise ValueError("analytic oracle gradients exist only for case 1")
    campaign = cls(case, config)
    theta_rng = np.random.default_rng(np.random.SeedSequence([rep_seed, 7]))
    true_theta = case.sample_true_theta(theta_rng)
    campaign.initialize(campaign.sample_initial_data(true_theta))
    trace = campaign.run_closed_loop(true_theta)
    if campaign.status == "decided":
        outcome = "S" if campaign.disc.winner == case.generator_index else "F"
    else:
        outcome = "I"
    return outcome, campaign.round_, trace


def run_benchmark(
    case_id: str,
    cells: list[tuple[str, str, str]],
    replicates: int,
    seed: int,
    progress=None,
) -> BenchmarkResult:
    """Run every (dc, md, method) cell over seeded replicates and aggregate.

    A replicate that crashes is excluded from the metrics and recorded on
    the cell as an infrastructure failure.
    """
    result = BenchmarkResult(case=case_id, replicates=replicates, seed=seed)
    for dc, md, method in cells:
        cell = CellResult(dc=dc, md=md, method=method)
        for r in range(replicates):
            try:
                outcome, rounds, trace = run_replicate(
                    case_id, dc, md, method, seed, r
                )
            except Exception:
                cell.crashes.append(traceback.format_exc())
                continue
            cell.outcomes.append(outcome)
            cell.rounds.append(rounds)
            cell.traces.append(trace)
            if progress is not None:
                progress(dc, md, method, r, outcome)
        result.cells[f"{dc}:{md}:{method}"] = cell
    return result


def export_weight_evolution(traces: list[list[dict]], path: str | Path) -> dict:
    """Long-format CSV of Akaike-weight evolutions plus per-round aggregates.

    Replicates that terminated early contribute their final weights to
    later rounds (carried forward) in the mean/std aggregates.
    """
    if not traces or not traces[0]:
        raise ValueError("need at least one non-empty trace")
    n_models = len(traces[0][0]["w"])
    max_round = max(row["round"] for tr in traces for row in tr)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "round", "model", "w"])
        for rep, tr in enumerate(traces):
            for row in tr:
                for m in range(n_models):
                    writer.writerow(
                        [rep, row["round"], m + 1, format(row["w"][m], ".17g")]
                    )
    # carried-forward aggregates
    series = np.full((len(traces), max_round + 1, n_models), np.nan)
    for rep, tr in enumerate(traces):
        current = np.full(n_models, np.nan)
        by_round = {row["round"]: np.array(row["w"]) for row in tr}
        first = min(by_round)
        for rnd in range(first, max_round + 1):
            if rnd in by_round:
                current = by_round[rnd]
            series[rep, rnd] = current
    mean = np.nanmean(series, axis=0)
    std = np.nanstd(series, axis=0)
    return {"mean": mean, "std": std, "max_round": max_round}
