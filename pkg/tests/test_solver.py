import itertools
import random

import pytest

from gen import random_fixed, random_instance
from vertisched.model import Schedule, check_schedule, make_instance
from vertisched.solver import (
    FixedAssignments,
    SolveConfig,
    brute_force_solve,
    critical_path_lower_bound,
    solve,
)


def simple(durations, requirements, capacities, precedences=(), horizon=None):
    return make_instance(durations, requirements, capacities, set(precedences), horizon)


def test_single_task():
    inst = simple({1: 3}, {1: {1: 1}}, {1: 2})
    result = solve(inst)
    assert result.status == "optimal"
    assert result.schedule.starts[1] == 0
    assert result.schedule.makespan == 3


def test_demo_baseline_places_anchor_task(demo_baseline, demo_record):
    assert demo_baseline.starts[4] == demo_record.baseline_start
    assert demo_baseline.makespan == demo_record.baseline_makespan


def test_case_study_reschedule_makespan(demo_inst, demo_record):
    reqs = {j: dict(demo_inst.requirements[j]) for j in demo_inst.real_tasks}
    reqs[4][1] = 1
    modified = make_instance(
        {j: demo_inst.durations[j] for j in demo_inst.real_tasks},
        reqs,
        dict(demo_inst.capacities),
        set(demo_inst.real_precedences()),
        demo_inst.horizon,
    )
    result = solve(modified, {4: 4})
    assert result.status == "optimal"
    assert result.schedule.starts[4] == 4
    assert result.schedule.makespan == demo_record.reschedule_makespan
    assert check_schedule(modified, result.schedule, {4: 4}).ok


def test_forced_serialization():
    inst = simple({1: 2, 2: 2}, {1: {1: 1}, 2: {1: 1}}, {1: 1})
    assert brute_force_solve(inst).schedule.makespan == 4


def test_full_parallelism():
    inst = simple({1: 2, 2: 2}, {1: {1: 1}, 2: {1: 1}}, {1: 2})
    assert brute_force_solve(inst).schedule.makespan == 2


def test_infeasible_under_pinned_overlap():
    # both tasks pinned to overlap on a capacity-1 resource
    inst = simple({1: 2, 2: 2}, {1: {1: 1}, 2: {1: 1}}, {1: 1}, horizon=6)
    result = solve(inst, {1: 0, 2: 1})
    assert result.status == "infeasible"
    assert brute_force_solve(inst, {1: 0, 2: 1}).status == "infeasible"


def test_fixed_assignments_type():
    inst = simple({1: 2}, {1: {1: 1}}, {1: 1}, horizon=5)
    result = solve(inst, FixedAssignments({1: 3}))
    assert result.schedule.starts[1] == 3
    assert result.schedule.makespan == 5


def test_fixed_outside_horizon_is_an_error():
    inst = simple({1: 2}, {1: {1: 1}}, {1: 1}, horizon=5)
    with pytest.raises(ValueError, match="horizon"):
        solve(inst, {1: 4})
    with pytest.raises(ValueError, match="unknown task"):
        solve(inst, {9: 0})


def test_lower_bound_examples(demo_inst):
    # chain 1 -> 3 contributes its duration-weighted length
    assert critical_path_lower_bound(demo_inst) >= 6
    empty = simple({}, {}, {1: 1})
    assert critical_path_lower_bound(empty) == 0
    inst = simple({1: 3}, {1: {1: 1}}, {1: 1}, horizon=20)
    assert critical_path_lower_bound(inst, {1: 10}) >= 13


def test_lower_bound_admissible():
    rng = random.Random(5)
    for _ in range(80):
        inst = random_instance(rng)
        fixed = random_fixed(rng, inst)
        result = solve(inst, fixed)
        if result.status == "optimal":
            assert critical_path_lower_bound(inst, fixed) <= result.schedule.makespan


def test_oracle_equivalence_sample():
    rng = random.Random(99)
    for _ in range(60):
        inst = random_instance(rng)
        fixed = random_fixed(rng, inst)
        a = solve(inst, fixed)
        b = brute_force_solve(inst, fixed)
        assert a.status == b.status
        if a.status == "optimal":
            assert a.schedule.makespan == b.schedule.makespan


def test_monotonicity_under_fixing():
    rng = random.Random(13)
    checked = 0
    while checked < 30:
        inst = random_instance(rng)
        base = solve(inst)
        if base.status != "optimal":
            continue
        task = rng.choice(list(inst.real_tasks))
        latest = inst.horizon - inst.durations[task]
        pinned = solve(inst, {task: rng.randint(0, latest)})
        assert pinned.status in ("optimal", "infeasible")
        if pinned.status == "optimal":
            assert pinned.schedule.makespan >= base.schedule.makespan
        checked += 1


def test_determinism(demo_inst):
    a = solve(demo_inst)
    b = solve(demo_inst)
    assert a.schedule.starts == b.schedule.starts
    assert a.nodes_explored == b.nodes_explored


def test_tie_break_is_lex_smallest():
    # tiny instances: compare against unpruned enumeration of all optima
    rng = random.Random(3)
    for _ in range(25):
        inst = random_instance(rng, n_tasks=rng.randint(2, 4), max_horizon=8)
        result = solve(inst)
        if result.status != "optimal":
            continue
        ranges = [range(0, inst.horizon - inst.durations[j] + 1) for j in inst.real_tasks]
        best = None
        for combo in itertools.product(*ranges):
            starts = {0: 0}
            starts.update(dict(zip(inst.real_tasks, combo)))
            starts[inst.sink] = max(starts[j] + inst.durations[j] for j in inst.tasks)
            sched = Schedule.of(inst, starts)
            if not check_schedule(inst, sched).ok:
                continue
            key = (sched.makespan, tuple(starts[j] for j in inst.tasks))
            if best is None or key < best:
                best = key
        assert best is not None
        assert result.schedule.makespan == best[0]
        assert tuple(result.schedule.starts[j] for j in inst.tasks) == best[1]


def test_node_limit_times_out(demo_inst):
    result = solve(demo_inst, None, SolveConfig(node_limit=50))
    assert result.status == "timeout"
    if result.schedule is not None:
        assert check_schedule(demo_inst, result.schedule).ok


def test_brute_force_guard_rails():
    inst = random_instance(random.Random(1), n_tasks=8, duration_range=(1, 2))
    with pytest.raises(ValueError, match="limited"):
        brute_force_solve(inst)


def test_empty_instance_solves_to_zero():
    inst = simple({}, {}, {1: 1})
    result = solve(inst)
    assert result.status == "optimal"
    assert result.schedule.makespan == 0
