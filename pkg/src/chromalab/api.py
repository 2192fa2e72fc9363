"""HTTP service exposing campaign lifecycle and reports.

A thin layer over the campaign package: no business logic of its own. Long
operations (stage advances, rounds) run on a background executor and the
handlers return 202 immediately; clients poll the snapshot endpoint.
"""

import threading
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .campaign import Campaign, CampaignConfig, Stage
from .errors import (
    CampaignLocked,
    ChromalabError,
    NoRounds,
    NoSuchCampaign,
    PreconditionFailed,
    RoleConstraintViolated,
    UnknownCandidate,
)

__all__ = ["create_app"]

_STATUS_BY_ERROR = (
    (NoSuchCampaign, 404),
    (NoRounds, 409),
    (PreconditionFailed, 409),
    (UnknownCandidate, 422),
    (RoleConstraintViolated, 422),
    (CampaignLocked, 423),
)


def _status_for(exc: ChromalabError) -> int:
    for klass, status in _STATUS_BY_ERROR:
        if isinstance(exc, klass):
            return status
    return 400


class CreateCampaignRequest(BaseModel):
    requirement: str
    id: Optional[str] = None
    config: dict = Field(default_factory=dict)


class CreateCampaignResponse(BaseModel):
    id: str
    stage: str


class SelectionEntry(BaseModel):
    cas: str
    role: str


class SelectionRequest(BaseModel):
    selections: list[SelectionEntry]


class SelectionResponse(BaseModel):
    stage: str
    dimension: int


class RoundsRequest(BaseModel):
    count: int = Field(default=1, ge=1)
    beta_override: Optional[float] = None


class JobAccepted(BaseModel):
    status: str
    job: str


class _JobRegistry:
    """At most one background job per campaign; remembers the last failure."""

    def __init__(self, max_workers: int = 4):
        self._executor = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, Future] = {}
        self._errors: dict[str, str] = {}
        self._kinds: dict[str, str] = {}
        self._lock = threading.Lock()

    def running(self, campaign_id: str) -> Optional[str]:
        with self._lock:
            fut = self._jobs.get(campaign_id)
            return self._kinds.get(campaign_id) if fut and not fut.done() else None

    def last_error(self, campaign_id: str) -> Optional[str]:
        with self._lock:
            return self._errors.get(campaign_id)

    def submit(self, campaign_id: str, kind: str, fn) -> str:
        with self._lock:
            fut = self._jobs.get(campaign_id)
            if fut and not fut.done():
                return self._kinds[campaign_id]
            self._errors.pop(campaign_id, None)

            def wrapped():
                try:
                    fn()
                except Exception as exc:
                    with self._lock:
                        self._errors[campaign_id] = str(exc)

            self._jobs[campaign_id] = self._executor.submit(wrapped)
            self._kinds[campaign_id] = kind
            return kind

    def shutdown(self):
        self._executor.shutdown(wait=True)


def create_app(root: Union[str, Path]) -> FastAPI:
    """App factory; ``root`` is the directory holding campaign subdirectories."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="chromalab", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    jobs = _JobRegistry()
    app.state.jobs = jobs
    app.state.root = root

    def campaign(campaign_id: str) -> Campaign:
        return Campaign.open(root / campaign_id)

    @app.exception_handler(ChromalabError)
    async def domain_error_handler(request: Request, exc: ChromalabError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"code": exc.code, "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/campaigns")
    def list_campaigns():
        out = []
        for path in sorted(root.iterdir()):
            if (path / "state.json").exists():
                snap = Campaign.open(path).snapshot()
                out.append({"id": snap["campaign_id"], "stage": snap["stage"],
                            "rounds_completed": snap["rounds_completed"]})
        return {"campaigns": out}

    @app.post("/campaigns", status_code=201, response_model=CreateCampaignResponse)
    def create_campaign(body: CreateCampaignRequest):
        campaign_id = body.id or f"c{uuid.uuid4().hex[:12]}"
        config = CampaignConfig.from_json_dict({**body.config, "requirement": body.requirement})
        created = Campaign.create(root / campaign_id, config)
        return CreateCampaignResponse(id=campaign_id, stage=created.state().stage)

    @app.get("/campaigns/{campaign_id}")
    def get_campaign(campaign_id: str):
        snap = campaign(campaign_id).snapshot()
        running = jobs.running(campaign_id)
        snap["job"] = {
            "status": "running" if running else "idle",
            "kind": running,
            "error": jobs.last_error(campaign_id),
        }
        return snap

    @app.post("/campaigns/{campaign_id}/advance", status_code=202, response_model=JobAccepted)
    def advance(campaign_id: str):
        c = campaign(campaign_id)
        if jobs.running(campaign_id):
            return JobAccepted(status="running", job=jobs.running(campaign_id) or "advance")
        stage = c.state().stage
        if stage == Stage.FEEDBACK:
            raise PreconditionFailed(
                "campaign is waiting for a reagent selection; submit one to continue")
        if stage == Stage.DONE:
            raise PreconditionFailed("campaign is complete")
        kind = jobs.submit(campaign_id, f"advance:{stage}", lambda: c.advance())
        return JobAccepted(status="accepted", job=kind)

    @app.get("/campaigns/{campaign_id}/candidates")
    def get_candidates(campaign_id: str, all: bool = False):
        c = campaign(campaign_id)
        state = c.state()
        config = c.config()
        full = state.candidates
        if full is None:
            return {"entries": [], "total_mined": 0, "threshold": config.candidate_threshold}
        shown = full if all else state.highlighted_candidates(config.candidate_threshold)
        return {
            "entries": shown.to_json_list(),
            "total_mined": len(full),
            "threshold": config.candidate_threshold,
        }

    @app.post("/campaigns/{campaign_id}/selection", response_model=SelectionResponse)
    def submit_selection(campaign_id: str, body: SelectionRequest):
        state = campaign(campaign_id).submit_selection(
            [{"cas": s.cas, "role": s.role} for s in body.selections])
        return SelectionResponse(stage=state.stage, dimension=state.dimension or 0)

    @app.post("/campaigns/{campaign_id}/rounds", status_code=202, response_model=JobAccepted)
    def run_rounds(campaign_id: str, body: RoundsRequest):
        c = campaign(campaign_id)
        if jobs.running(campaign_id):
            return JobAccepted(status="running", job=jobs.running(campaign_id) or "rounds")
        state = c.state()
        if state.stage != Stage.EXECUTION:
            raise PreconditionFailed(
                f"rounds run at the execution stage, not {state.stage!r}")
        kind = jobs.submit(
            campaign_id, f"rounds:{body.count}",
            lambda: c.run(n_rounds=body.count, beta_override=body.beta_override))
        return JobAccepted(status="accepted", job=kind)

    @app.get("/campaigns/{campaign_id}/report")
    def get_report(campaign_id: str):
        return campaign(campaign_id).report()

    return app
