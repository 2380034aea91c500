"""Instance parsing and serialization.

Two text formats are supported: the native JSON document and the
single-mode project scheduling exchange layout (``psplib-sm``) used by
the standard benchmark libraries. The native serializer emits canonical
key ordering so files diff cleanly.
"""

from __future__ import annotations

import json
import re
from typing import Any

from .model import Instance, InvalidInstanceError, make_instance, validate_instance

FORMATS = ("native", "psplib-sm")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


def parse_instance(text: str, fmt: str = "native") -> Instance:
    if fmt == "native":
        return _parse_native(text)
    if fmt == "psplib-sm":
        return _validated(_parse_psplib(text))
    raise ParseError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _validated(inst: Instance) -> Instance:
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError(report)
    return inst


# ---------------------------------------------------------------------------
# native JSON format


def parse_document(doc: Any) -> Instance:
    """Build a validated Instance from a decoded native document."""
    root = _require_obj(doc, "document")
    _reject_unknown(root, {"tasks", "resources", "horizon"}, "document")
    tasks = root.get("tasks")
    resources = root.get("resources")
    if not isinstance(tasks, list):
        raise ParseError("field 'tasks' must be a list")
    if not isinstance(resources, list):
        raise ParseError("field 'resources' must be a list")

    capacities: dict[int, int] = {}
    for entry in resources:
        obj = _require_obj(entry, "resource entry")
        _reject_unknown(obj, {"id", "capacity"}, "resource entry")
        rid = _require_int(obj.get("id"), "resource id")
        if rid in capacities:
            raise ParseError(f"duplicate resource id {rid}")
        capacities[rid] = _require_int(obj.get("capacity"), f"capacity of resource {rid}")

    durations: dict[int, int] = {}
    requirements: dict[int, dict[int, int]] = {}
    successors: dict[int, list[int]] = {}
    for entry in tasks:
        obj = _require_obj(entry, "task entry")
        _reject_unknown(obj, {"id", "duration", "requirements", "successors"}, "task entry")
        tid = _require_int(obj.get("id"), "task id")
        if tid in durations:
            raise ParseError(f"duplicate task id {tid}")
        durations[tid] = _require_int(obj.get("duration"), f"duration of task {tid}")
        req_obj = obj.get("requirements", {})
        if not isinstance(req_obj, dict):
            raise ParseError(f"requirements of task {tid} must be an object")
        row: dict[int, int] = {}
        for key, val in req_obj.items():
            try:
                rid = int(key)
            except (TypeError, ValueError):
                raise ParseError(f"requirement key {key!r} of task {tid} is not a resource id") from None
            row[rid] = _require_int(val, f"requirement of task {tid} on resource {rid}")
        requirements[tid] = row
        succ = obj.get("successors", [])
        if not isinstance(succ, list):
            raise ParseError(f"successors of task {tid} must be a list")
        successors[tid] = [_require_int(s, f"successor of task {tid}") for s in succ]

    horizon = root.get("horizon")
    if horizon is not None:
        horizon = _require_int(horizon, "horizon")

    precedences = {(i, j) for i, succ in successors.items() for j in succ}
    try:
        inst = make_instance(durations, requirements, capacities, precedences, horizon)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return _validated(inst)


def _parse_native(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return parse_document(doc)


def serialize_instance(inst: Instance) -> str:
    """Canonical native text: tasks by id, positive requirements only, sorted keys."""
    return json.dumps(instance_document(inst), indent=2) + "\n"


def instance_document(inst: Instance) -> dict:
    tasks = []
    succ_real = {j: sorted(s for s in inst.successors(j) if s in set(inst.real_tasks)) for j in inst.real_tasks}
    for j in inst.real_tasks:
        tasks.append(
            {
                "id": j,
                "duration": inst.durations[j],
                "requirements": {str(r): inst.requirements[j][r] for r in inst.resources if inst.requirements[j][r] > 0},
                "successors": succ_real[j],
            }
        )
    return {
        "tasks": tasks,
        "resources": [{"id": r, "capacity": inst.capacities[r]} for r in inst.resources],
        "horizon": inst.horizon,
    }


def _require_obj(value: Any, what: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError(f"{what} must be an object")
    return value


def _require_int(value: Any, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{what} must be an integer, got {value!r}")
    return value


def _reject_unknown(obj: dict, allowed: set[str], what: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)} in {what}")


# ---------------------------------------------------------------------------
# psplib single-mode format


def _parse_psplib(text: str) -> Instance:
    lines = text.splitlines()

    horizon = None
    n_jobs = None
    for line in lines:
        m = re.match(r"\s*horizon\s*:\s*(\d+)", line)
        if m:
            horizon = int(m.group(1))
        m = re.match(r"\s*jobs\s*\(incl\. supersource/sink\s*\)\s*:\s*(\d+)", line)
        if m:
            n_jobs = int(m.group(1))

    succ_rows = _section_rows(lines, "PRECEDENCE RELATIONS", skip=1)
    req_header_idx = _find_line(lines, "REQUESTS/DURATIONS")
    req_rows = _section_rows(lines, "REQUESTS/DURATIONS", skip=2)
    avail_idx = _find_line(lines, "RESOURCEAVAILABILITIES")

    if req_header_idx is None or avail_idx is None or not succ_rows or not req_rows:
        raise ParseError("missing PRECEDENCE RELATIONS, REQUESTS/DURATIONS or RESOURCEAVAILABILITIES section")

    resource_names = re.findall(r"[RNDrnd]\s*\d+", lines[avail_idx + 1])
    avail_values = [int(tok) for tok in lines[avail_idx + 2].split()]
    if len(resource_names) != len(avail_values):
        raise ParseError("resource availability names and values disagree", line=avail_idx + 3)
    m_res = len(avail_values)
    capacities = {r + 1: avail_values[r] for r in range(m_res)}

    successors_by_job: dict[int, list[int]] = {}
    for lineno, row in succ_rows:
        vals = [int(tok) for tok in row.split()]
        if len(vals) < 3:
            raise ParseError("malformed precedence row", line=lineno)
        job, _mode, n_succ = vals[0], vals[1], vals[2]
        succ = vals[3:]
        if len(succ) != n_succ:
            raise ParseError(f"job {job} declares {n_succ} successors but lists {len(succ)}", line=lineno)
        successors_by_job[job] = succ

    durations_by_job: dict[int, int] = {}
    requirements_by_job: dict[int, list[int]] = {}
    for lineno, row in req_rows:
        vals = [int(tok) for tok in row.split()]
        if len(vals) != 3 + m_res:
            raise ParseError("malformed request/duration row", line=lineno)
        job = vals[0]
        durations_by_job[job] = vals[2]
        requirements_by_job[job] = vals[3:]

    jobs = sorted(durations_by_job)
    if n_jobs is not None and len(jobs) != n_jobs:
        raise ParseError(f"header declares {n_jobs} jobs but {len(jobs)} rows found")
    if len(jobs) < 2 or jobs != list(range(1, len(jobs) + 1)):
        raise ParseError("job ids must be the dense range 1..J")
    first, last = jobs[0], jobs[-1]

    # Jobs 1 and J are the file's own dummies; real tasks shift down by one.
    durations = {job - 1: durations_by_job[job] for job in jobs[1:-1]}
    requirements = {
        job - 1: {r + 1: requirements_by_job[job][r] for r in range(m_res)} for job in jobs[1:-1]
    }
    precedences = set()
    for job, succ in successors_by_job.items():
        if job in (first, last):
            continue
        for s in succ:
            if s in (first, last):
                continue
            precedences.add((job - 1, s - 1))

    return make_instance(durations, requirements, capacities, precedences, horizon)


def _find_line(lines: list[str], marker: str) -> int | None:
    for idx, line in enumerate(lines):
        if marker in line:
            return idx
    return None


def _section_rows(lines: list[str], marker: str, skip: int) -> list[tuple[int, str]]:
    start = _find_line(lines, marker)
    if start is None:
        return []
    rows: list[tuple[int, str]] = []
    for idx in range(start + 1 + skip, len(lines)):
        line = lines[idx]
        if line.startswith("*") or not line.strip():
            break
        rows.append((idx + 1, line))
    return rows
