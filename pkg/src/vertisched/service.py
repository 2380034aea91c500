"""Session-oriented scheduling service over the file store.

Instances, solved baselines and dialogue sessions persist as individual
documents; every handler loads the stored state, applies one transition
and persists the successor, so a process restart resumes exactly where
the store left off. Dialogue waiting is re-entrant: instead of blocking
on an answer, a session parks in ``awaiting-answer`` and the per-question
wait becomes an expiry enforced lazily whenever the session is touched.
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Callable

from .formats import ParseError, parse_document
from .intent import (
    DegenerateRequestError,
    DialogueMachine,
    DialogueState,
    IntentConfig,
    RescheduleRequest,
    machine_outcome,
)
from .logic import TriState
from .model import Instance, InvalidInstanceError, Schedule
from .pipeline import DispatchConfig, Explanation, RescheduleResult, complete_reschedule
from .solver import SolveConfig, solve
from .store import Store


class ServiceError(Exception):
    status = 500


class BadRequestError(ServiceError):
    status = 400


class NotFoundError(ServiceError):
    status = 404


class ConflictError(ServiceError):
    status = 409


def parse_request_document(doc: dict) -> RescheduleRequest:
    """Decode the wire form of a reschedule request (flags as 0/1/null)."""
    if not isinstance(doc, dict):
        raise BadRequestError("request document must be an object")
    unknown = set(doc) - {"task", "desired_start", "desired_resources", "delta", "rho", "eta", "theta"}
    if unknown:
        raise BadRequestError(f"unknown request field(s) {sorted(unknown)}")
    if "task" not in doc:
        raise BadRequestError("request document misses 'task'")
    try:
        resources = {
            int(r): int(a) for r, a in (doc.get("desired_resources") or {}).items()
        }
        return RescheduleRequest(
            target=int(doc["task"]),
            desired_start=None if doc.get("desired_start") is None else int(doc["desired_start"]),
            desired_resources=resources,
            delta=TriState.from_digit(doc.get("delta")),
            rho=TriState.from_digit(doc.get("rho")),
            eta=TriState.from_digit(doc.get("eta")),
            theta=TriState.from_digit(doc.get("theta")),
        )
    except (TypeError, ValueError) as exc:
        raise BadRequestError(f"malformed request document: {exc}") from exc


def request_to_document(req: RescheduleRequest) -> dict:
    def digit(flag: TriState):
        return None if not flag.decided else int(flag.as_bool())

    return {
        "task": req.target,
        "desired_start": req.desired_start,
        "desired_resources": {str(r): a for r, a in sorted(req.desired_resources.items())},
        "delta": digit(req.delta),
        "rho": digit(req.rho),
        "eta": digit(req.eta),
        "theta": digit(req.theta),
    }


def schedule_to_document(sched: Schedule) -> dict:
    return {"starts": {str(t): s for t, s in sorted(sched.starts.items())}, "makespan": sched.makespan}


def schedule_from_document(doc: dict) -> Schedule:
    return Schedule(starts={int(t): s for t, s in doc["starts"].items()}, makespan=doc["makespan"])


class SchedulerService:
    """All service operations behind the HTTP facade and the CLI."""

    def __init__(
        self,
        store: Store,
        expiry: float = 60.0,
        time_limit: float = 300.0,
        clock: Callable[[], float] = time.time,
        solve_cfg: SolveConfig | None = None,
        fix_scope: str = "predecessors",
    ):
        self.store = store
        self.expiry = expiry
        self.time_limit = time_limit
        self.clock = clock
        self.dispatch_cfg = DispatchConfig(
            intent=IntentConfig(time_limit=time_limit, answer_wait=expiry, clock=clock),
            solve=solve_cfg or SolveConfig(),
            fix_scope=fix_scope,
        )
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- instances

    def create_instance(self, document: dict) -> str:
        try:
            parse_document(document)
        except (ParseError, InvalidInstanceError) as exc:
            raise BadRequestError(str(exc)) from exc
        instance_id = uuid.uuid4().hex[:12]
        self.store.put("instances", instance_id, document)
        return instance_id

    def get_instance_document(self, instance_id: str) -> dict:
        doc = self.store.get("instances", instance_id)
        if doc is None:
            raise NotFoundError(f"no instance {instance_id}")
        return doc

    def load_instance(self, instance_id: str) -> Instance:
        return parse_document(self.get_instance_document(instance_id))

    def solve_baseline(self, instance_id: str) -> Schedule:
        cached = self.store.get("baselines", instance_id)
        if cached is not None:
            return schedule_from_document(cached)
        inst = self.load_instance(instance_id)
        result = solve(inst, None, self.dispatch_cfg.solve)
        if result.status != "optimal":
            raise ConflictError(f"baseline solve ended with status {result.status}")
        self.store.put("baselines", instance_id, schedule_to_document(result.schedule))
        return result.schedule

    # -- sessions

    def open_request(self, instance_id: str, request_doc: dict) -> dict:
        inst = self.load_instance(instance_id)
        baseline = self.solve_baseline(instance_id)
        req = parse_request_document(request_doc)

        session_id = uuid.uuid4().hex[:12]
        now = self.clock()
        session = {
            "id": session_id,
            "instance_id": instance_id,
            "state": "awaiting-request",
            "request": request_to_document(req),
            "machine": None,
            "result": None,
            "created_at": now,
            "updated_at": now,
        }
        try:
            machine = DialogueMachine.begin(inst, baseline, req)
        except DegenerateRequestError as exc:
            result = RescheduleResult(
                status="invalid-request",
                schedule=None,
                explanation=Explanation(request=req.echo(), failure=str(exc)),
            )
            session["state"] = "failed"
            session["result"] = result.to_dict()
            self.store.put("sessions", session_id, session)
            return self._view(session)

        session["machine"] = machine.to_dict()
        if machine.state.terminal:
            self._finish(session, inst, baseline, req, machine)
        else:
            session["state"] = "awaiting-answer"
        self.store.put("sessions", session_id, session)
        return self._view(session)

    def answer(self, session_id: str, text: str) -> dict:
        with self._lease(session_id):
            session = self._load_session(session_id)
            self._apply_expiry(session, persist=True)
            if session["state"] != "awaiting-answer":
                raise ConflictError(f"session {session_id} is {session['state']}, not awaiting an answer")
            machine = DialogueMachine.from_dict(session["machine"])
            machine.submit(text)
            session["machine"] = machine.to_dict()
            session["updated_at"] = self.clock()
            if machine.state.terminal:
                inst = self.load_instance(session["instance_id"])
                baseline = self.solve_baseline(session["instance_id"])
                req = parse_request_document(session["request"])
                self._finish(session, inst, baseline, req, machine)
            self.store.put("sessions", session_id, session)
            return self._view(session)

    def get_session(self, session_id: str) -> dict:
        with self._lease(session_id):
            session = self._load_session(session_id)
            self._apply_expiry(session, persist=True)
            return self._view(session)

    def get_result(self, session_id: str) -> dict:
        with self._lease(session_id):
            session = self._load_session(session_id)
            self._apply_expiry(session, persist=True)
            if session["state"] not in ("done", "failed"):
                raise ConflictError(f"session {session_id} has no result yet")
            return session["result"]

    def transcript(self, session_id: str) -> str:
        session = self._load_session(session_id)
        if session["machine"] is None:
            return ""
        return DialogueMachine.from_dict(session["machine"]).transcript()

    # -- internals

    def _load_session(self, session_id: str) -> dict:
        session = self.store.get("sessions", session_id)
        if session is None:
            raise NotFoundError(f"no session {session_id}")
        return session

    def _lease(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _apply_expiry(self, session: dict, persist: bool) -> None:
        if session["state"] != "awaiting-answer":
            return
        now = self.clock()
        stale = now - session["updated_at"] >= self.expiry
        overrun = now - session["created_at"] >= self.time_limit
        if not stale and not overrun:
            return
        machine = DialogueMachine.from_dict(session["machine"])
        machine.force_timeout()
        session["machine"] = machine.to_dict()
        session["updated_at"] = now
        inst = self.load_instance(session["instance_id"])
        baseline = self.solve_baseline(session["instance_id"])
        req = parse_request_document(session["request"])
        self._finish(session, inst, baseline, req, machine)
        if persist:
            self.store.put("sessions", session["id"], session)

    def _finish(
        self,
        session: dict,
        inst: Instance,
        baseline: Schedule,
        req: RescheduleRequest,
        machine: DialogueMachine,
    ) -> None:
        result = complete_reschedule(inst, baseline, req, machine_outcome(machine), self.dispatch_cfg)
        session["result"] = result.to_dict()
        session["state"] = "done" if result.status == "ok" else "failed"

    def _view(self, session: dict) -> dict:
        machine_doc = session["machine"]
        question = None
        history = []
        if machine_doc is not None:
            if machine_doc["pending"] and session["state"] == "awaiting-answer":
                question = {"symbol": machine_doc["pending"]["symbol"], "text": machine_doc["pending"]["question"]}
            history = machine_doc["history"]
        return {
            "id": session["id"],
            "instance_id": session["instance_id"],
            "state": session["state"],
            "question": question,
            "history": history,
            "result": session["result"],
            "created_at": session["created_at"],
            "updated_at": session["updated_at"],
        }
