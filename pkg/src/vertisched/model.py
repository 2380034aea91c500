"""Domain model for time-indexed, resource-constrained project schedules.

Task ids are dense integers with two synthetic endpoints: id 0 is the
project start and id n+1 the project end. Both endpoints have zero
duration and zero resource demand; every real task lies on a path from
the start to the end. Time is discrete and unit-granular.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

SOURCE = 0


class InvalidInstanceError(ValueError):
    """Raised when an instance fails structural validation."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        lines = "; ".join(v.detail for v in report.violations)
        super().__init__(f"invalid instance: {lines}")


@dataclass(frozen=True)
class Violation:
    kind: str  # precedence | capacity | fixed-start | horizon
    detail: str
    task: int | None = None
    resource: int | None = None
    time: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Instance:
    """An immutable scheduling instance, endpoints included.

    ``tasks`` is the full ordered id range 0..n+1. ``precedences`` holds
    every ordered pair, including the synthetic edges that tie sources to
    task 0 and sinks to task n+1.
    """

    tasks: tuple[int, ...]
    durations: dict[int, int]
    requirements: dict[int, dict[int, int]]  # task -> resource -> units
    resources: tuple[int, ...]
    capacities: dict[int, int]
    precedences: frozenset[tuple[int, int]]
    horizon: int

    @property
    def sink(self) -> int:
        return self.tasks[-1]

    @property
    def real_tasks(self) -> tuple[int, ...]:
        return self.tasks[1:-1]

    @property
    def n_real(self) -> int:
        return len(self.tasks) - 2

    def real_precedences(self) -> frozenset[tuple[int, int]]:
        """Precedence pairs between real tasks only (synthetic edges dropped)."""
        real = set(self.real_tasks)
        return frozenset((i, j) for (i, j) in self.precedences if i in real and j in real)

    def predecessors(self, task: int) -> set[int]:
        return {i for (i, j) in self.precedences if j == task}

    def successors(self, task: int) -> set[int]:
        return {j for (i, j) in self.precedences if i == task}

    def total_duration(self) -> int:
        """Sum of real-task durations; the default horizon."""
        return sum(self.durations[j] for j in self.real_tasks)


@dataclass(frozen=True)
class Schedule:
    """Start times for every task of an instance, endpoints included."""

    starts: dict[int, int]
    makespan: int

    @classmethod
    def of(cls, inst: Instance, starts: dict[int, int]) -> "Schedule":
        missing = [j for j in inst.tasks if j not in starts]
        if missing:
            raise ValueError(f"schedule misses tasks {missing}")
        return cls(starts=dict(starts), makespan=starts[inst.sink])


def make_instance(
    durations: dict[int, int],
    requirements: dict[int, dict[int, int]],
    capacities: dict[int, int],
    precedences: set[tuple[int, int]] | frozenset[tuple[int, int]],
    horizon: int | None = None,
) -> Instance:
    """Build a normalized instance from real-task data.

    Real task ids must be exactly 1..n. Synthetic endpoints 0 and n+1 are
    added here, along with edges tying precedence-free tasks to them. An
    unspecified horizon defaults to the sum of all durations.
    """
    n = len(durations)
    if sorted(durations) != list(range(1, n + 1)):
        raise ValueError(f"real task ids must be 1..{n}, got {sorted(durations)}")
    for j, p in durations.items():
        if not isinstance(p, int) or isinstance(p, bool) or p < 0:
            raise ValueError(f"duration of task {j} must be a non-negative integer")
    resources = tuple(sorted(capacities))
    for r, c in capacities.items():
        if not isinstance(c, int) or isinstance(c, bool) or c <= 0:
            raise ValueError(f"capacity of resource {r} must be a positive integer")

    sink = n + 1
    tasks = tuple(range(0, n + 2))
    full_durations = {0: 0, sink: 0}
    full_durations.update(durations)

    full_requirements: dict[int, dict[int, int]] = {}
    for j in tasks:
        row = requirements.get(j, {}) if 1 <= j <= n else {}
        for r, u in row.items():
            if r not in capacities:
                raise ValueError(f"task {j} requires unknown resource {r}")
            if not isinstance(u, int) or isinstance(u, bool) or u < 0:
                raise ValueError(f"requirement of task {j} on resource {r} must be a non-negative integer")
        full_requirements[j] = {r: row.get(r, 0) for r in resources}

    real = set(range(1, n + 1))
    edges: set[tuple[int, int]] = set()
    for (i, j) in precedences:
        if i not in real or j not in real:
            raise ValueError(f"precedence ({i},{j}) references a non-real task id")
        if i == j:
            raise ValueError(f"self-precedence on task {i}")
        edges.add((i, j))

    has_pred = {j for (_, j) in edges}
    has_succ = {i for (i, _) in edges}
    for j in real:
        if j not in has_pred:
            edges.add((0, j))
        if j not in has_succ:
            edges.add((j, sink))
    if not real:
        edges.add((0, sink))

    if horizon is None:
        horizon = sum(durations.values())
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 0:
        raise ValueError("horizon must be a non-negative integer")

    return Instance(
        tasks=tasks,
        durations=full_durations,
        requirements=full_requirements,
        resources=resources,
        capacities={r: capacities[r] for r in resources},
        precedences=frozenset(edges),
        horizon=horizon,
    )


def topological_order(tasks: tuple[int, ...], precedences: frozenset[tuple[int, int]]) -> list[int] | None:
    """Kahn's algorithm with a min-id heap; None when the graph has a cycle."""
    indeg = {j: 0 for j in tasks}
    succ: dict[int, list[int]] = {j: [] for j in tasks}
    for (i, j) in precedences:
        if i in indeg and j in indeg:
            indeg[j] += 1
            succ[i].append(j)
    ready = [j for j in tasks if indeg[j] == 0]
    heapq.heapify(ready)
    out: list[int] = []
    while ready:
        j = heapq.heappop(ready)
        out.append(j)
        for k in succ[j]:
            indeg[k] -= 1
            if indeg[k] == 0:
                heapq.heappush(ready, k)
    if len(out) != len(tasks):
        return None
    return out


def longest_path_length(inst: Instance) -> int:
    """Duration-weighted longest path from the start endpoint to the end one."""
    order = topological_order(inst.tasks, inst.precedences)
    if order is None:
        raise ValueError("precedence graph has a cycle")
    dist = {j: 0 for j in inst.tasks}
    for j in order:
        for k in inst.successors(j):
            cand = dist[j] + inst.durations[j]
            if cand > dist[k]:
                dist[k] = cand
    return dist[inst.sink]


def validate_instance(inst: Instance) -> ValidationReport:
    """Structural diagnostics: cycles, dangling edges, capacity and horizon fits."""
    violations: list[Violation] = []
    known = set(inst.tasks)

    for (i, j) in sorted(inst.precedences):
        if i not in known or j not in known:
            violations.append(Violation("precedence", f"precedence ({i},{j}) references an unknown task", task=i))

    order = topological_order(inst.tasks, inst.precedences)
    if order is None:
        violations.append(Violation("precedence", "precedence graph has a cycle"))

    if any(j == SOURCE for (_, j) in inst.precedences):
        violations.append(Violation("precedence", "start endpoint has a predecessor", task=SOURCE))
    if any(i == inst.sink for (i, _) in inst.precedences):
        violations.append(Violation("precedence", "end endpoint has a successor", task=inst.sink))

    if order is not None:
        reach_fwd = _reachable_from(inst, SOURCE)
        reach_bwd = _reachable_to(inst, inst.sink)
        for j in inst.real_tasks:
            if j not in reach_fwd or j not in reach_bwd:
                violations.append(Violation("precedence", f"task {j} is not on a path between the endpoints", task=j))

    for j in inst.real_tasks:
        for r in inst.resources:
            u = inst.requirements[j][r]
            if u > inst.capacities[r]:
                violations.append(
                    Violation(
                        "capacity",
                        f"task {j} requires {u} of resource {r}, above capacity {inst.capacities[r]}",
                        task=j,
                        resource=r,
                    )
                )

    if order is not None and not any(v.kind == "precedence" for v in violations):
        cp = longest_path_length(inst)
        if inst.horizon < cp:
            violations.append(Violation("horizon", f"horizon {inst.horizon} is below the critical path length {cp}"))

    return ValidationReport(violations=tuple(violations))


def _reachable_from(inst: Instance, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    succ: dict[int, list[int]] = {j: [] for j in inst.tasks}
    for (i, j) in inst.precedences:
        succ[i].append(j)
    while stack:
        j = stack.pop()
        for k in succ[j]:
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return seen


def _reachable_to(inst: Instance, end: int) -> set[int]:
    seen = {end}
    stack = [end]
    pred: dict[int, list[int]] = {j: [] for j in inst.tasks}
    for (i, j) in inst.precedences:
        pred[j].append(i)
    while stack:
        j = stack.pop()
        for k in pred[j]:
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return seen


def check_schedule(
    inst: Instance,
    sched: Schedule,
    fixed: dict[int, int] | None = None,
) -> ValidationReport:
    """Verify a schedule against precedence, capacity, horizon and pinned starts."""
    fixed = fixed or {}
    missing = [j for j in inst.tasks if j not in sched.starts]
    if missing:
        raise ValueError(f"schedule misses tasks {missing}")

    violations: list[Violation] = []
    starts = sched.starts

    for (j, s) in sorted(inst.precedences):
        if starts[s] - starts[j] < inst.durations[j]:
            violations.append(
                Violation(
                    "precedence",
                    f"task {s} starts at {starts[s]} before predecessor {j} finishes at {starts[j] + inst.durations[j]}",
                    task=s,
                )
            )

    for j in sorted(inst.tasks):
        if starts[j] < 0 or starts[j] + inst.durations[j] > inst.horizon:
            violations.append(
                Violation("horizon", f"task {j} runs outside [0, {inst.horizon}]", task=j, time=starts[j])
            )

    usage: dict[int, list[int]] = {r: [0] * inst.horizon for r in inst.resources}
    for j in inst.real_tasks:
        for t in range(max(starts[j], 0), min(starts[j] + inst.durations[j], inst.horizon)):
            for r in inst.resources:
                usage[r][t] += inst.requirements[j][r]
    for r in inst.resources:
        for t in range(inst.horizon):
            if usage[r][t] > inst.capacities[r]:
                violations.append(
                    Violation(
                        "capacity",
                        f"resource {r} is loaded {usage[r][t]}/{inst.capacities[r]} at time {t}",
                        resource=r,
                        time=t,
                    )
                )

    for j, t in sorted(fixed.items()):
        if starts.get(j) != t:
            violations.append(
                Violation("fixed-start", f"task {j} starts at {starts.get(j)} instead of its pinned time {t}", task=j)
            )

    return ValidationReport(violations=tuple(violations))
