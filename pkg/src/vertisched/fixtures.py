"""Bundled demonstration instance and its capacity derivation.

The demo data (durations, requirements, successor links) ships without
resource capacities; the recorded capacities come from ``capacity_search``,
which scans candidate vectors for the pair of anchor conditions below and
records the first lexicographic match. The recorded file is the regression
oracle for every golden value in the test suite.

Anchor conditions:
  (a) the optimal baseline places task 4 at start 5;
  (b) dropping task 4's resource-1 demand to 1 and pinning it at start 4
      (precedence kept) yields an optimal makespan of 21.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources as importlib_resources

from .model import Instance, make_instance
from .solver import solve

DEMO_DURATIONS = {1: 5, 2: 4, 3: 1, 4: 3, 5: 4, 6: 3, 7: 1, 8: 4, 9: 5, 10: 3}
DEMO_REQUIREMENTS = {
    1: {1: 3, 2: 3},
    2: {1: 3, 3: 2},
    3: {3: 2},
    4: {1: 2, 3: 3},
    5: {2: 3},
    6: {1: 2, 2: 1},
    7: {3: 3},
    8: {1: 1, 3: 2},
    9: {1: 2},
    10: {2: 3},
}
DEMO_SUCCESSORS = {1: [3], 2: [3], 4: [5, 6], 7: [8], 9: [10]}
DEMO_HORIZON = 35

# the reschedule anchored by condition (b)
ANCHOR_TASK = 4
ANCHOR_START = 4
ANCHOR_RESOURCE = 1
ANCHOR_AMOUNT = 1
ANCHOR_BASELINE_START = 5
ANCHOR_MAKESPAN = 21

CANDIDATE_CAPACITIES = (3, 4, 5, 6)


@dataclass(frozen=True)
class CapacityRecord:
    capacities: tuple[int, int, int]
    exact: bool
    baseline_makespan: int
    baseline_start: int  # start of the anchor task in the baseline
    reschedule_makespan: int
    note: str = ""


def demo_precedences() -> set[tuple[int, int]]:
    return {(i, j) for i, succ in DEMO_SUCCESSORS.items() for j in succ}


def demo_instance(capacities: dict[int, int] | None = None) -> Instance:
    if capacities is None:
        capacities = dict(enumerate(load_record().capacities, start=1))
    return make_instance(DEMO_DURATIONS, DEMO_REQUIREMENTS, capacities, demo_precedences(), DEMO_HORIZON)


def _anchor_requirements() -> dict[int, dict[int, int]]:
    rows = {j: dict(r) for j, r in DEMO_REQUIREMENTS.items()}
    rows[ANCHOR_TASK] = dict(rows[ANCHOR_TASK])
    rows[ANCHOR_TASK][ANCHOR_RESOURCE] = ANCHOR_AMOUNT
    rows[ANCHOR_TASK] = {r: u for r, u in rows[ANCHOR_TASK].items() if u > 0}
    return rows


def _evaluate(capacities: dict[int, int]) -> tuple[int | None, int | None, int | None]:
    """(baseline makespan, baseline anchor start, reschedule makespan) for one vector."""
    inst = make_instance(DEMO_DURATIONS, DEMO_REQUIREMENTS, capacities, demo_precedences(), DEMO_HORIZON)
    base = solve(inst)
    if base.status != "optimal":
        return None, None, None
    re_inst = make_instance(
        DEMO_DURATIONS, _anchor_requirements(), capacities, demo_precedences(), DEMO_HORIZON
    )
    re = solve(re_inst, {ANCHOR_TASK: ANCHOR_START})
    re_mk = re.schedule.makespan if re.status == "optimal" else None
    return base.schedule.makespan, base.schedule.starts[ANCHOR_TASK], re_mk


def capacity_search() -> CapacityRecord:
    """Scan candidate capacity vectors in lexicographic order.

    Stops at the first vector meeting both anchor conditions. When none
    does, the whole grid is scored and the nearest vector is recorded with
    a note describing the gap.
    """
    nearest: tuple[tuple[int, int, int], int, tuple] | None = None
    for c1, c2, c3 in itertools.product(CANDIDATE_CAPACITIES, repeat=3):
        caps = {1: c1, 2: c2, 3: c3}
        base_mk, base_start, re_mk = _evaluate(caps)
        if base_mk is None:
            continue
        if base_start == ANCHOR_BASELINE_START and re_mk == ANCHOR_MAKESPAN:
            return CapacityRecord(
                capacities=(c1, c2, c3),
                exact=True,
                baseline_makespan=base_mk,
                baseline_start=base_start,
                reschedule_makespan=re_mk,
            )
        score = (0 if base_start == ANCHOR_BASELINE_START else 100) + (
            abs(re_mk - ANCHOR_MAKESPAN) if re_mk is not None else 100
        )
        if nearest is None or score < nearest[1]:
            nearest = ((c1, c2, c3), score, (base_mk, base_start, re_mk))
    assert nearest is not None, "every candidate vector failed to even solve"
    caps, _score, (base_mk, base_start, re_mk) = nearest
    return CapacityRecord(
        capacities=caps,
        exact=False,
        baseline_makespan=base_mk,
        baseline_start=base_start,
        reschedule_makespan=re_mk if re_mk is not None else -1,
        note=(
            f"no candidate met both anchors; nearest places task {ANCHOR_TASK} at "
            f"{base_start} with reschedule makespan {re_mk}"
        ),
    )


def load_record() -> CapacityRecord:
    text = importlib_resources.files("vertisched").joinpath("data/demo_record.json").read_text()
    doc = json.loads(text)
    return CapacityRecord(
        capacities=tuple(doc["capacities"]),
        exact=doc["exact"],
        baseline_makespan=doc["baseline_makespan"],
        baseline_start=doc["baseline_start"],
        reschedule_makespan=doc["reschedule_makespan"],
        note=doc.get("note", ""),
    )


def record_document(record: CapacityRecord) -> dict:
    return {
        "capacities": list(record.capacities),
        "exact": record.exact,
        "baseline_makespan": record.baseline_makespan,
        "baseline_start": record.baseline_start,
        "reschedule_makespan": record.reschedule_makespan,
        "note": record.note,
    }
