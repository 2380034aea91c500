import json
import shutil

import pytest
from fastapi.testclient import TestClient

from vertisched.api import create_app
from vertisched.formats import instance_document
from vertisched.service import (
    BadRequestError,
    ConflictError,
    NotFoundError,
    SchedulerService,
    parse_request_document,
)
from vertisched.store import Store

TINY_DOC = {
    "tasks": [
        {"id": 1, "duration": 2, "requirements": {"1": 1}, "successors": [3]},
        {"id": 2, "duration": 2, "requirements": {"1": 1}, "successors": [3]},
        {"id": 3, "duration": 1, "requirements": {"1": 1}, "successors": []},
    ],
    "resources": [{"id": 1, "capacity": 1}],
    "horizon": 8,
}

CASE_STUDY_REQUEST = {"task": 4, "desired_start": 4, "desired_resources": {"1": 1}}
CASE_STUDY_ANSWERS = ["Yes", "2", "1", "1"]


class ManualClock:
    def __init__(self):
        self.now = 1000.0

    def __call__(self):
        return self.now


@pytest.fixture()
def clock():
    return ManualClock()


@pytest.fixture()
def service(tmp_path, clock):
    return SchedulerService(Store(tmp_path), expiry=60.0, time_limit=300.0, clock=clock)


@pytest.fixture(scope="module")
def demo_service(tmp_path_factory, demo_inst):
    svc = SchedulerService(Store(tmp_path_factory.mktemp("svc")))
    doc = instance_document(demo_inst)
    iid = svc.create_instance(doc)
    svc.solve_baseline(iid)  # warm the cache once for the whole module
    return svc, iid


def run_dialogue(svc, sid, answers):
    view = None
    for answer in answers:
        view = svc.answer(sid, answer)
    return view


# -- instances and baselines


def test_create_and_solve_demo(demo_service, demo_record):
    svc, iid = demo_service
    baseline = svc.solve_baseline(iid)
    assert baseline.starts[4] == demo_record.baseline_start
    assert baseline.makespan == demo_record.baseline_makespan
    # repeated calls come from the cache
    again = svc.solve_baseline(iid)
    assert again.starts == baseline.starts


def test_dummy_only_instance(service):
    iid = service.create_instance({"tasks": [], "resources": [{"id": 1, "capacity": 1}]})
    assert service.solve_baseline(iid).makespan == 0


def test_create_rejects_cycle(service):
    doc = {
        "tasks": [
            {"id": 1, "duration": 1, "requirements": {}, "successors": [2]},
            {"id": 2, "duration": 1, "requirements": {}, "successors": [1]},
        ],
        "resources": [{"id": 1, "capacity": 1}],
    }
    with pytest.raises(BadRequestError, match="cycle"):
        service.create_instance(doc)


def test_unknown_instance(service):
    with pytest.raises(NotFoundError):
        service.solve_baseline("nope")


# -- sessions


def test_open_ambiguous_request_awaits_first_question(demo_service):
    svc, iid = demo_service
    view = svc.open_request(iid, CASE_STUDY_REQUEST)
    assert view["state"] == "awaiting-answer"
    assert view["question"]["symbol"] == 1
    assert view["question"]["text"].startswith("Do you want the new schedule")


def test_open_unambiguous_request_completes(demo_service, demo_record):
    svc, iid = demo_service
    req = dict(CASE_STUDY_REQUEST, eta=1, theta=1)
    view = svc.open_request(iid, req)
    assert view["state"] == "done"
    assert view["result"]["status"] == "ok"
    assert view["result"]["schedule"]["makespan"] == demo_record.reschedule_makespan


def test_open_invalid_task_fails(demo_service):
    svc, iid = demo_service
    view = svc.open_request(iid, {"task": 99, "desired_start": 4, "desired_resources": {"1": 1}})
    assert view["state"] == "failed"
    assert view["result"]["status"] == "invalid-request"


def test_open_degenerate_request_fails(demo_service, demo_record):
    svc, iid = demo_service
    view = svc.open_request(iid, {"task": 4, "desired_start": demo_record.baseline_start})
    assert view["state"] == "failed"
    assert view["result"]["status"] == "invalid-request"


def test_case_study_session(demo_service, demo_record):
    svc, iid = demo_service
    view = svc.open_request(iid, CASE_STUDY_REQUEST)
    sid = view["id"]
    view = run_dialogue(svc, sid, CASE_STUDY_ANSWERS)
    assert view["state"] == "done"
    result = svc.get_result(sid)
    assert result["status"] == "ok"
    assert result["schedule"]["starts"]["4"] == 4
    assert result["schedule"]["makespan"] == demo_record.reschedule_makespan
    assert result["explanation"]["intent_label"] == "op_11"
    transcript = svc.transcript(sid)
    assert transcript == result["explanation"]["transcript"]
    assert 'sym: [sym(1,"true"), sym(2,"true")]' in transcript
    assert "intent: [intent(op_11)]" in transcript


def test_invalid_answer_reissues_question(demo_service):
    svc, iid = demo_service
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    view = svc.answer(sid, "Yes")
    assert view["state"] == "awaiting-answer"
    assert view["question"]["symbol"] == 1  # same question again
    assert "Invalid answer: Yes" in svc.transcript(sid)


def test_op00_answer_path(demo_service):
    svc, iid = demo_service
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    view = run_dialogue(svc, sid, ["0", "0"])
    assert view["state"] in ("done", "failed")
    result = svc.get_result(sid)
    assert result["explanation"]["intent_label"] == "op_00"


def test_answer_on_done_session_conflicts(demo_service):
    svc, iid = demo_service
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    run_dialogue(svc, sid, CASE_STUDY_ANSWERS)
    with pytest.raises(ConflictError):
        svc.answer(sid, "1")


def test_result_before_terminal_conflicts(demo_service):
    svc, iid = demo_service
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    with pytest.raises(ConflictError):
        svc.get_result(sid)
    snapshot = svc.get_session(sid)
    assert snapshot["state"] == "awaiting-answer"
    assert snapshot["question"] is not None


def test_unknown_session(demo_service):
    svc, _ = demo_service
    with pytest.raises(NotFoundError):
        svc.get_session("missing")


def test_expiry_times_out_lazily(tmp_path, clock, demo_inst):
    svc = SchedulerService(Store(tmp_path), expiry=60.0, time_limit=300.0, clock=clock)
    iid = svc.create_instance(instance_document(demo_inst))
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    clock.now += 61.0
    view = svc.get_session(sid)
    assert view["state"] == "failed"
    assert view["result"]["status"] == "interaction-timeout"
    with pytest.raises(ConflictError):
        svc.answer(sid, "1")


def test_total_budget_times_out(tmp_path, clock, demo_inst):
    svc = SchedulerService(Store(tmp_path), expiry=60.0, time_limit=90.0, clock=clock)
    iid = svc.create_instance(instance_document(demo_inst))
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    clock.now += 50.0
    svc.answer(sid, "1")
    clock.now += 50.0  # 100 > 90 total
    view = svc.get_session(sid)
    assert view["state"] == "failed"
    assert view["result"]["status"] == "interaction-timeout"


def test_sessions_survive_restart(tmp_path, clock, demo_inst, demo_record):
    svc = SchedulerService(Store(tmp_path), clock=clock)
    iid = svc.create_instance(instance_document(demo_inst))
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    svc.answer(sid, "1")
    # a new process: fresh service over the same directory
    svc2 = SchedulerService(Store(tmp_path), clock=clock)
    view = svc2.answer(sid, "1")
    assert view["state"] == "done"
    assert svc2.get_result(sid)["schedule"]["makespan"] == demo_record.reschedule_makespan


def test_handlers_are_stateless(tmp_path, clock, demo_inst):
    # the same stored state plus the same input yields the same stored successor
    svc = SchedulerService(Store(tmp_path / "a"), clock=clock)
    iid = svc.create_instance(instance_document(demo_inst))
    sid = svc.open_request(iid, CASE_STUDY_REQUEST)["id"]
    shutil.copytree(tmp_path / "a", tmp_path / "b")
    svc_b = SchedulerService(Store(tmp_path / "b"), clock=clock)
    svc.answer(sid, "1")
    svc_b.answer(sid, "1")
    doc_a = (tmp_path / "a" / "sessions" / f"{sid}.json").read_text()
    doc_b = (tmp_path / "b" / "sessions" / f"{sid}.json").read_text()
    assert doc_a == doc_b


def test_parse_request_document_errors():
    with pytest.raises(BadRequestError):
        parse_request_document({"desired_start": 1})
    with pytest.raises(BadRequestError):
        parse_request_document({"task": 1, "unknown": 2})
    with pytest.raises(BadRequestError):
        parse_request_document({"task": 1, "delta": 5})


# -- HTTP layer


@pytest.fixture(scope="module")
def client(tmp_path_factory, demo_inst):
    app = create_app(tmp_path_factory.mktemp("api"))
    with TestClient(app) as c:
        doc = instance_document(demo_inst)
        iid = c.post("/instances", json=doc).json()["id"]
        c.post(f"/instances/{iid}/baseline")
        yield c, iid


def test_http_full_session(client, demo_record):
    c, iid = client
    r = c.post(f"/instances/{iid}/sessions", json=CASE_STUDY_REQUEST)
    assert r.status_code == 201
    sid = r.json()["id"]
    for answer in CASE_STUDY_ANSWERS:
        r = c.post(f"/sessions/{sid}/answers", json={"answer": answer})
        assert r.status_code == 200
    assert r.json()["state"] == "done"
    result = c.get(f"/sessions/{sid}/result")
    assert result.status_code == 200
    assert result.json()["schedule"]["makespan"] == demo_record.reschedule_makespan
    transcript = c.get(f"/sessions/{sid}/transcript")
    assert transcript.status_code == 200
    assert transcript.headers["content-type"].startswith("text/plain")
    assert transcript.text.startswith("Result:request(4,1,1) result(valid_request)")


def test_http_error_codes(client):
    c, iid = client
    assert c.get("/instances/zzz").status_code == 404
    assert c.get("/sessions/zzz").status_code == 404
    assert c.post("/instances/zzz/baseline").status_code == 404
    bad = {"tasks": [], "resources": [{"id": 1, "capacity": 1}], "oops": 1}
    assert c.post("/instances", json=bad).status_code == 422
    cyclic = {
        "tasks": [
            {"id": 1, "duration": 1, "successors": [2]},
            {"id": 2, "duration": 1, "successors": [1]},
        ],
        "resources": [{"id": 1, "capacity": 1}],
    }
    assert c.post("/instances", json=cyclic).status_code == 400
    sid = c.post(f"/instances/{iid}/sessions", json=CASE_STUDY_REQUEST).json()["id"]
    assert c.get(f"/sessions/{sid}/result").status_code == 409


def test_http_instance_roundtrip(client, demo_inst):
    c, iid = client
    doc = c.get(f"/instances/{iid}").json()
    from vertisched.formats import parse_document

    assert parse_document(doc) == demo_inst


def test_http_tiny_instance_flow():
    app = create_app_tmp()
    with TestClient(app) as c:
        iid = c.post("/instances", json=TINY_DOC).json()["id"]
        baseline = c.post(f"/instances/{iid}/baseline").json()
        assert baseline["makespan"] == 5  # capacity 1 serializes the two front tasks
        req = {"task": 3, "desired_start": 6, "delta": 1, "rho": 1, "eta": 1, "theta": 1}
        view = c.post(f"/instances/{iid}/sessions", json=req).json()
        assert view["state"] == "done"
        assert view["result"]["schedule"]["starts"]["3"] == 6


def create_app_tmp():
    import tempfile

    return create_app(tempfile.mkdtemp(prefix="vertisched-test-"))
