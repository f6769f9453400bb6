"""HTTP facade over the schedule builders, executor, and cost model.

Request/response bodies are pydantic models; the CLI is one client of
this app, test suites and notebooks are others.  Run standalone with
`python -m mcollsim.service` or point uvicorn at `mcollsim.service:app`.
"""

from __future__ import annotations

import json

import uvicorn
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from mcollsim.algorithms import ALGORITHMS
from mcollsim.costmodel import PRESET_NAMES, default_transports
from mcollsim.experiment import (
    DEFAULT_SWEEP_SIZES,
    DEFAULT_VERIFY_SIZES,
    ExperimentConfig,
    run_dump,
    run_simulate,
    run_sweep,
    run_verify,
)

__version__ = "0.1.0"


class VerifyRequest(BaseModel):
    nodes: int = Field(default=128, ge=1)
    ppn: int = Field(default=18, ge=1)
    algos: list[str] = Field(default_factory=lambda: list(ALGORITHMS))
    sizes: list[int] = Field(default_factory=lambda: list(DEFAULT_VERIFY_SIZES))
    seed: int = 0


class VerifyResultModel(BaseModel):
    algo: str
    msg_bytes: int
    status: str
    detail: str = ""


class VerifyResponse(BaseModel):
    ok: bool
    nodes: int
    ppn: int
    results: list[VerifyResultModel]


class SimulateRequest(BaseModel):
    nodes: int = Field(default=128, ge=1)
    ppn: int = Field(default=18, ge=1)
    algo: str = "mcoll"
    msg_bytes: int = Field(default=16, ge=1)
    transport: str = "pip"
    params: str = "opa-broadwell"


class PhaseTimeModel(BaseModel):
    phase: str
    time_us: float


class SimulateResponse(BaseModel):
    algo: str
    transport: str
    nodes: int
    ppn: int
    msg_bytes: int
    sim_time_us: float
    inter_rounds: int
    max_msgs_per_rank: int
    wire_bytes: int
    phases: list[PhaseTimeModel]


class SweepRequest(BaseModel):
    nodes: int = Field(default=128, ge=1)
    ppn: int = Field(default=18, ge=1)
    algos: list[str] = Field(default_factory=lambda: list(ALGORITHMS))
    sizes: list[int] = Field(default_factory=lambda: list(DEFAULT_SWEEP_SIZES))
    transport: str = "pip"
    params: str = "opa-broadwell"
    seed: int = 0


class SweepResponse(BaseModel):
    csv: str
    skipped: list[str]


class DumpRequest(BaseModel):
    nodes: int = Field(default=128, ge=1)
    ppn: int = Field(default=18, ge=1)
    algo: str = "mcoll"
    msg_bytes: int = Field(default=16, ge=1)


def _config(req, sizes_default=DEFAULT_SWEEP_SIZES, **overrides) -> ExperimentConfig:
    body = {
        "nodes": req.nodes,
        "ppn": req.ppn,
        "algos": tuple(getattr(req, "algos", ALGORITHMS)),
        "sizes": tuple(getattr(req, "sizes", sizes_default)),
        "transport": getattr(req, "transport", "pip"),
        "params": getattr(req, "params", "opa-broadwell"),
        "seed": getattr(req, "seed", 0),
    }
    body.update(overrides)
    return ExperimentConfig(**body)


def create_app() -> FastAPI:
    app = FastAPI(title="mcollsim", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/algorithms")
    def algorithms() -> dict:
        return {"algorithms": list(ALGORITHMS)}

    @app.get("/presets")
    def presets() -> dict:
        return {
            "presets": list(PRESET_NAMES),
            "transports": sorted(default_transports()),
        }

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest) -> VerifyResponse:
        cfg = _config(req, sizes_default=DEFAULT_VERIFY_SIZES)
        out = _guard(run_verify, cfg)
        return VerifyResponse(
            ok=out.ok,
            nodes=out.nodes,
            ppn=out.ppn,
            results=[
                VerifyResultModel(
                    algo=r.algo, msg_bytes=r.msg_bytes, status=r.status, detail=r.detail
                )
                for r in out.results
            ],
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate_one(req: SimulateRequest) -> SimulateResponse:
        cfg = _config(req, algos=(req.algo,), sizes=(req.msg_bytes,))
        row, phases = _guard(run_simulate, cfg, req.algo, req.msg_bytes)
        return SimulateResponse(
            algo=row.algo,
            transport=row.transport,
            nodes=row.nodes,
            ppn=row.ppn,
            msg_bytes=row.msg_bytes,
            sim_time_us=row.sim_time_us,
            inter_rounds=row.inter_rounds,
            max_msgs_per_rank=row.max_msgs_per_rank,
            wire_bytes=row.wire_bytes,
            phases=[
                PhaseTimeModel(phase=pt.phase, time_us=pt.seconds * 1e6)
                for pt in phases
            ],
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        cfg = _config(req)
        out = _guard(run_sweep, cfg)
        return SweepResponse(csv=out.csv, skipped=list(out.skipped))

    @app.post("/dump")
    def dump(req: DumpRequest) -> dict:
        cfg = _config(req, algos=(req.algo,), sizes=(req.msg_bytes,))
        text = _guard(run_dump, cfg, req.algo, req.msg_bytes)
        return json.loads(text)

    return app


def _guard(fn, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        # topology, schedule, shape, and params errors all subclass ValueError
        raise HTTPException(status_code=400, detail=str(exc)) from exc


app = create_app()


if __name__ == "__main__":
    uvicorn.run(app, host="127.0.0.1", port=8000)
