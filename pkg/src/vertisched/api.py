"""HTTP facade: FastAPI application over the scheduler service."""

from __future__ import annotations

import time
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, ConfigDict, Field

from .service import SchedulerService, ServiceError, schedule_to_document
from .solver import SolveConfig
from .store import Store


class TaskModel(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)
    id: int
    duration: int
    requirements: dict[str, int] = Field(default_factory=dict)
    successors: list[int] = Field(default_factory=list)


class ResourceModel(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)
    id: int
    capacity: int


class InstanceDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)
    tasks: list[TaskModel]
    resources: list[ResourceModel]
    horizon: Optional[int] = None

    def to_native(self) -> dict:
        doc: dict = {
            "tasks": [
                {
                    "id": t.id,
                    "duration": t.duration,
                    "requirements": dict(t.requirements),
                    "successors": list(t.successors),
                }
                for t in self.tasks
            ],
            "resources": [{"id": r.id, "capacity": r.capacity} for r in self.resources],
        }
        if self.horizon is not None:
            doc["horizon"] = self.horizon
        return doc


class RequestDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)
    task: int
    desired_start: Optional[int] = None
    desired_resources: dict[str, int] = Field(default_factory=dict)
    delta: Optional[int] = None
    rho: Optional[int] = None
    eta: Optional[int] = None
    theta: Optional[int] = None

    def to_wire(self) -> dict:
        return {
            "task": self.task,
            "desired_start": self.desired_start,
            "desired_resources": dict(self.desired_resources),
            "delta": self.delta,
            "rho": self.rho,
            "eta": self.eta,
            "theta": self.theta,
        }


class AnswerBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    answer: str


class InstanceCreated(BaseModel):
    id: str


class ScheduleModel(BaseModel):
    starts: dict[str, int]
    makespan: int


class QuestionModel(BaseModel):
    symbol: int
    text: str


class HistoryEventModel(BaseModel):
    symbol: int
    question: str
    answer: Optional[str]


class ResultModel(BaseModel):
    status: str
    schedule: Optional[ScheduleModel]
    explanation: dict


class SessionModel(BaseModel):
    id: str
    instance_id: str
    state: str
    question: Optional[QuestionModel]
    history: list[HistoryEventModel]
    result: Optional[ResultModel]
    created_at: float
    updated_at: float


def create_app(
    data_dir: str | Path,
    expiry: float = 60.0,
    time_limit: float = 300.0,
    clock: Callable[[], float] = time.time,
    solve_cfg: SolveConfig | None = None,
) -> FastAPI:
    service = SchedulerService(
        Store(data_dir), expiry=expiry, time_limit=time_limit, clock=clock, solve_cfg=solve_cfg
    )
    app = FastAPI(title="vertisched", version="0.1.0")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ServiceError)
    async def service_error(_, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"detail": str(exc)})

    @app.post("/instances", response_model=InstanceCreated, status_code=201)
    def create_instance(doc: InstanceDocument):
        return InstanceCreated(id=service.create_instance(doc.to_native()))

    @app.get("/instances/{instance_id}")
    def get_instance(instance_id: str):
        return service.get_instance_document(instance_id)

    @app.post("/instances/{instance_id}/baseline", response_model=ScheduleModel)
    def solve_baseline(instance_id: str):
        return ScheduleModel(**schedule_to_document(service.solve_baseline(instance_id)))

    @app.post("/instances/{instance_id}/sessions", response_model=SessionModel, status_code=201)
    def open_session(instance_id: str, request: RequestDocument):
        return SessionModel(**service.open_request(instance_id, request.to_wire()))

    @app.get("/sessions/{session_id}", response_model=SessionModel)
    def get_session(session_id: str):
        return SessionModel(**service.get_session(session_id))

    @app.post("/sessions/{session_id}/answers", response_model=SessionModel)
    def post_answer(session_id: str, body: AnswerBody):
        return SessionModel(**service.answer(session_id, body.answer))

    @app.get("/sessions/{session_id}/result", response_model=ResultModel)
    def get_result(session_id: str):
        return ResultModel(**service.get_result(session_id))

    @app.get("/sessions/{session_id}/transcript", response_class=PlainTextResponse)
    def get_transcript(session_id: str) -> Response:
        return PlainTextResponse(service.transcript(session_id))

    return app
