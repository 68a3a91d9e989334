"""HTTP service over the campaign store; backs the web dashboard."""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .campaign import Campaign, CampaignConfig, load_case, trace_to_csv
from .exceptions import CampaignTerminated, IndiscriminableTermination, OutOfBounds


class CreateCampaignBody(BaseModel):
    case: str = Field(pattern="^(1|2|2-3)$")
    design_criterion: str = "bh"
    md: str = "pi"
    taylor_order: int = 1
    budget: int | None = None
    n0: int | None = None
    seed: int = 0
    n_sim: int | None = None


class ObserveBody(BaseModel):
    x: list[float]
    y: list[float]


class CampaignStore:
    """Disk-backed store with one mutation lock per campaign."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, Campaign] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def path(self, cid: str) -> Path:
        return self.root / f"{cid}.json"

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))

    def lock(self, cid: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(cid, threading.Lock())

    def get(self, cid: str) -> Campaign:
        if cid not in self._cache:
            p = self.path(cid)
            if not p.exists():
                raise HTTPException(404, f"unknown campaign {cid}")
            self._cache[cid] = Campaign.load(p)
        return self._cache[cid]

    def save(self, cid: str, campaign: Campaign) -> None:
        self._cache[cid] = campaign
        campaign.save(self.path(cid))


def campaign_view(cid: str, camp: Campaign) -> dict:
    last_prop = next(
        (h for h in reversed(camp.history) if h["event"] == "proposal"), None
    )
    return {
        "id": cid,
        "round": camp.round_,
        "status": camp.status,
        "winner": camp.disc.winner,
        "model_names": [m.name for m in camp.case.models],
        "pi": camp.disc.posteriors.tolist(),
        "w": camp.disc.weights.tolist(),
        "chi2_pass": camp.disc.chi2_pass.tolist(),
        "latest_proposal": last_prop,
        "design_bounds": camp.case.design_space.bounds.tolist(),
        "output_dim": camp.case.noise.dim,
        "data": camp.data.to_records(),
        "history": [h for h in camp.history if h["event"] == "observation"],
        "config": camp.config.to_dict(),
    }


def create_app(store_dir: str | Path) -> FastAPI:
    app = FastAPI(title="seqdisc campaign service")
    store = CampaignStore(store_dir)
    app.state.store = store

    def mutate(cid: str):
        lock = store.lock(cid)
        if not lock.acquire(blocking=False):
            raise HTTPException(409, f"campaign {cid} is busy")
        return lock

    @app.get("/api/campaigns")
    def list_campaigns():
        out = []
        for cid in store.ids():
            camp = store.get(cid)
            out.append(
                {"id": cid, "status": camp.status, "round": camp.round_}
            )
        return out

    @app.post("/api/campaigns", status_code=201)
    def create_campaign(body: CreateCampaignBody):
        case = load_case(body.case)
        try:
            config = CampaignConfig(
                case=body.case,
                design_criterion=body.design_criterion,
                md=body.md,
                taylor_order=body.taylor_order,
                budget=body.budget if body.budget is not None else case.budget_default,
                n0=body.n0 if body.n0 is not None else case.n0_default,
                seed=body.seed,
                n_sim=body.n_sim,
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        camp = Campaign(case, config)
        theta_rng = np.random.default_rng(
            np.random.SeedSequence([body.seed, 7])
        )
        true_theta = case.sample_true_theta(theta_rng)
        camp.initialize(camp.sample_initial_data(true_theta))
        cid = uuid.uuid4().hex[:12]
        store.save(cid, camp)
        return campaign_view(cid, camp)

    @app.get("/api/campaigns/{cid}")
    def get_campaign(cid: str):
        return campaign_view(cid, store.get(cid))

    @app.post("/api/campaigns/{cid}/propose")
    def propose(cid: str):
        lock = mutate(cid)
        try:
            camp = store.get(cid)
            try:
                x_star, value = camp.propose()
            except CampaignTerminated as exc:
                raise HTTPException(409, str(exc))
            except IndiscriminableTermination as exc:
                store.save(cid, camp)
                raise HTTPException(409, f"indiscriminable: {exc}")
            store.save(cid, camp)
            return {"x_star": x_star.tolist(), "criterion_value": value}
        finally:
            lock.release()

    @app.post("/api/campaigns/{cid}/observe")
    def observe(cid: str, body: ObserveBody):
        lock = mutate(cid)
        try:
            camp = store.get(cid)
            if len(body.y) != camp.case.noise.dim:
                raise HTTPException(
                    422,
                    {"field": "y", "message": f"expected {camp.case.noise.dim} values"},
                )
            try:
                camp.observe(np.array(body.x), np.array(body.y))
            except OutOfBounds as exc:
                raise HTTPException(
                    422, {"field": "x", "message": str(exc)}
                )
            except CampaignTerminated as exc:
                raise HTTPException(409, str(exc))
            except ValueError as exc:
                raise HTTPException(422, {"field": "y", "message": str(exc)})
            store.save(cid, camp)
            return campaign_view(cid, camp)
        finally:
            lock.release()

    @app.get("/api/campaigns/{cid}/predictive")
    def predictive(cid: str, x: str = Query(...)):
        camp = store.get(cid)
        try:
            xv = np.array([float(v) for v in x.split(",")])
        except ValueError:
            raise HTTPException(400, "x must be comma-separated floats")
        if xv.size != camp.case.design_space.dim:
            raise HTTPException(422, {"field": "x", "message": "wrong dimension"})
        if not camp.case.design_space.contains(xv):
            raise HTTPException(422, {"field": "x", "message": "outside design box"})
        mus, covs = camp.predictive_moments(xv[None, :], include_noise=False)
        return [
            {
                "model": camp.case.models[i].name,
                "mu": mus[i, 0].tolist(),
                "var": np.maximum(np.diagonal(covs[i, 0]), 0.0).tolist(),
            }
            for i in range(camp.n_models)
        ]

    @app.get("/api/campaigns/{cid}/trace.csv", response_class=PlainTextResponse)
    def trace_csv(cid: str):
        import tempfile

        camp = store.get(cid)
        with tempfile.NamedTemporaryFile("r", suffix=".csv") as tmp:
            trace_to_csv(camp, tmp.name)
            return Path(tmp.name).read_text()

    return app
