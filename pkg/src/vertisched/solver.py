"""Exact makespan minimization for time-indexed instances.

``solve`` runs a two-phase depth-first branch and bound: phase one proves
the optimal makespan, phase two reconstructs the lexicographically
smallest start vector achieving it (the fixed tie-break rule, so equal
inputs always yield byte-equal schedules). ``brute_force_solve`` is the
independent enumeration oracle used to cross-check it at small sizes.
"""

from __future__ import annotations

import time
from collections.abc import Mapping
from dataclasses import dataclass, field

from .model import (
    SOURCE,
    Instance,
    InvalidInstanceError,
    Schedule,
    check_schedule,
    topological_order,
    validate_instance,
)


@dataclass(frozen=True)
class FixedAssignments:
    """Tasks pinned to mandated start times before solving."""

    entries: dict[int, int] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "FixedAssignments":
        return cls({})

    def get(self, task: int) -> int | None:
        return self.entries.get(task)

    def items(self):
        return self.entries.items()

    def __contains__(self, task: int) -> bool:
        return task in self.entries

    def __bool__(self) -> bool:
        return bool(self.entries)


@dataclass(frozen=True)
class SolveConfig:
    node_limit: int | None = None
    time_limit: float | None = None
    tie_break: str = "lex-smallest-starts"

    def __post_init__(self):
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node_limit must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.tie_break != "lex-smallest-starts":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | timeout
    schedule: Schedule | None
    nodes_explored: int
    elapsed: float


class _Limit(Exception):
    """Internal unwind when the node or time budget is exhausted."""


class _Search:
    """Shared state for one solve call: usage grid, counters, limits."""

    def __init__(self, inst: Instance, cfg: SolveConfig):
        self.inst = inst
        self.cfg = cfg
        self.nodes = 0
        self.deadline = None if cfg.time_limit is None else time.perf_counter() + cfg.time_limit
        self.usage = {r: [0] * inst.horizon for r in inst.resources}
        self.preds = {j: sorted(inst.predecessors(j)) for j in inst.tasks}
        # (grid, capacity, units) triples per task, positive demands only
        self.demand: dict[int, list[tuple[list[int], int, int]]] = {
            j: [
                (self.usage[r], inst.capacities[r], u)
                for r, u in sorted(inst.requirements[j].items())
                if u > 0
            ]
            for j in inst.tasks
        }

    def tick(self):
        self.nodes += 1
        if self.cfg.node_limit is not None and self.nodes > self.cfg.node_limit:
            raise _Limit()
        if self.deadline is not None and self.nodes % 256 == 0 and time.perf_counter() > self.deadline:
            raise _Limit()

    def fits(self, task: int, start: int) -> bool:
        demand = self.demand[task]
        if not demand:
            return True
        end = start + self.inst.durations[task]
        for grid, cap, u in demand:
            limit = cap - u
            for t in range(start, end):
                if grid[t] > limit:
                    return False
        return True

    def place(self, task: int, start: int, sign: int):
        end = start + self.inst.durations[task]
        for grid, _cap, u in self.demand[task]:
            d = sign * u
            for t in range(start, end):
                grid[t] += d

    def static_energy_bound(self) -> int:
        """Whole-instance energy bound: total work over capacity, per resource."""
        inst = self.inst
        worst = 0
        for r in inst.resources:
            total = sum(inst.requirements[j][r] * inst.durations[j] for j in inst.real_tasks)
            bound = -(-total // inst.capacities[r])
            if bound > worst:
                worst = bound
        return worst


def _tails(inst: Instance) -> dict[int, int]:
    """Longest duration-weighted path from each task to the end, own duration included."""
    order = topological_order(inst.tasks, inst.precedences)
    assert order is not None
    tails = {j: inst.durations[j] for j in inst.tasks}
    succ = {j: inst.successors(j) for j in inst.tasks}
    for j in reversed(order):
        best = 0
        for k in succ[j]:
            if tails[k] > best:
                best = tails[k]
        tails[j] = inst.durations[j] + best
    return tails


def _fixed_entries(fixed: FixedAssignments | Mapping[int, int] | None) -> dict[int, int]:
    if fixed is None:
        return {}
    if isinstance(fixed, FixedAssignments):
        return dict(fixed.entries)
    return dict(fixed)


def _check_fixed(inst: Instance, fixed: dict[int, int]) -> None:
    for j, t in fixed.items():
        if j not in set(inst.tasks):
            raise ValueError(f"fixed assignment references unknown task {j}")
        if t < 0 or t + inst.durations[j] > inst.horizon:
            raise ValueError(f"fixed start {t} of task {j} falls outside the horizon")


def critical_path_lower_bound(
    inst: Instance, fixed: FixedAssignments | Mapping[int, int] | None = None
) -> int:
    """Longest-path bound on the makespan, lifted by pinned start times."""
    entries = _fixed_entries(fixed)
    order = topological_order(inst.tasks, inst.precedences)
    if order is None:
        raise ValueError("precedence graph has a cycle")
    est = {j: max(0, entries.get(j, 0)) for j in inst.tasks}
    for j in order:
        for k in inst.successors(j):
            cand = est[j] + inst.durations[j]
            if cand > est[k]:
                est[k] = cand
    return est[inst.sink]


def solve(
    inst: Instance,
    fixed: FixedAssignments | Mapping[int, int] | None = None,
    cfg: SolveConfig | None = None,
) -> SolveResult:
    """Minimize the makespan subject to precedence, capacity and pinned starts.

    Returns status ``optimal`` with the canonical (lex-smallest) optimal
    schedule, ``infeasible`` when no schedule satisfies the constraints,
    or ``timeout`` with the best incumbent when a budget runs out.
    """
    cfg = cfg or SolveConfig()
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError(report)
    entries = _fixed_entries(fixed)
    _check_fixed(inst, entries)

    started = time.perf_counter()
    search = _Search(inst, cfg)
    try:
        best = _phase1(search, entries)
        if best is None:
            return SolveResult("infeasible", None, search.nodes, time.perf_counter() - started)
        makespan, incumbent = best
        starts = _phase2(search, entries, makespan)
        assert starts is not None, "phase 2 must rediscover the proven makespan"
        schedule = Schedule.of(inst, starts)
        return SolveResult("optimal", schedule, search.nodes, time.perf_counter() - started)
    except _Limit:
        incumbent_sched = None
        if getattr(search, "incumbent", None) is not None:
            incumbent_sched = Schedule.of(inst, search.incumbent)
        return SolveResult("timeout", incumbent_sched, search.nodes, time.perf_counter() - started)


def _greedy_seed(search: _Search, order: list[int], entries: dict[int, int]) -> dict[int, int] | None:
    """Earliest-feasible list schedule; None when it dead-ends."""
    inst = search.inst
    starts: dict[int, int] = {}
    placed: list[tuple[int, int]] = []
    ok = True
    for j in order:
        est = 0
        for i in search.preds[j]:
            est = max(est, starts[i] + inst.durations[i])
        if j == SOURCE:
            t = 0
            if entries.get(SOURCE, 0) != 0:
                ok = False
                break
        elif j in entries:
            t = entries[j]
            if t < est or t + inst.durations[j] > inst.horizon or not search.fits(j, t):
                ok = False
                break
        else:
            t = None
            for cand in range(est, inst.horizon - inst.durations[j] + 1):
                if search.fits(j, cand):
                    t = cand
                    break
            if t is None:
                ok = False
                break
        starts[j] = t
        search.place(j, t, +1)
        placed.append((j, t))
    for j, t in reversed(placed):
        search.place(j, t, -1)
    return starts if ok else None


def _phase1(search: _Search, entries: dict[int, int]) -> tuple[int, dict[int, int]] | None:
    """Depth-first proof of the optimal makespan; returns (makespan, witness)."""
    inst = search.inst
    order = topological_order(inst.tasks, inst.precedences)
    assert order is not None
    tails = _tails(inst)
    durations = inst.durations
    # nothing can beat the critical path or the per-resource energy floor
    floor = max(critical_path_lower_bound(inst, entries), search.static_energy_bound())

    best_makespan: int | None = None
    best_starts: dict[int, int] | None = None
    search.incumbent = None

    seed = _greedy_seed(search, order, entries)
    if seed is not None:
        best_makespan = seed[inst.sink]
        best_starts = seed
        search.incumbent = dict(seed)

    if best_makespan is not None and best_makespan <= floor:
        return best_makespan, best_starts

    starts: dict[int, int] = {}

    def dfs(pos: int):
        nonlocal best_makespan, best_starts
        search.tick()
        if pos == len(order):
            mk = starts[inst.sink]
            if best_makespan is None or mk < best_makespan:
                best_makespan = mk
                best_starts = dict(starts)
                search.incumbent = dict(starts)
            return
        j = order[pos]
        est = 0
        for i in search.preds[j]:
            f = starts[i] + durations[i]
            if f > est:
                est = f
        if j == SOURCE:
            candidates = [0] if entries.get(SOURCE, 0) == 0 else []
        elif j in entries:
            t = entries[j]
            candidates = [t] if t >= est else []
        else:
            candidates = range(est, inst.horizon - durations[j] + 1)
        tail = tails[j]
        for t in candidates:
            if best_makespan is not None and t + tail >= best_makespan:
                break  # starts ascend, so later candidates are no better
            if not search.fits(j, t):
                continue
            starts[j] = t
            search.place(j, t, +1)
            dfs(pos + 1)
            search.place(j, t, -1)
            del starts[j]
            if best_makespan is not None and best_makespan <= floor:
                return  # incumbent matches the lower bound: proven optimal

    dfs(0)
    if best_makespan is None:
        return None
    return best_makespan, best_starts


def _phase2(search: _Search, entries: dict[int, int], makespan: int) -> dict[int, int] | None:
    """Lexicographically smallest start vector with the proven makespan.

    Tasks are assigned in id order inside precedence-propagated start
    windows; the first complete assignment found is the lex minimum.
    """
    inst = search.inst
    sink = inst.sink
    succ = {j: sorted(inst.successors(j)) for j in inst.tasks}
    real = list(inst.real_tasks)
    order = topological_order(inst.tasks, inst.precedences)
    assert order is not None

    assigned: dict[int, int] = {SOURCE: 0, sink: makespan}
    if entries.get(SOURCE, 0) != 0 or entries.get(sink, makespan) != makespan:
        return None
    for j, t in entries.items():
        assigned.setdefault(j, t)
        if assigned[j] != t:
            return None
    pinned_real = [(j, t) for j, t in assigned.items() if j in set(real)]
    for j, t in pinned_real:
        search.place(j, t, +1)

    def windows() -> tuple[dict[int, int], dict[int, int]] | None:
        est = {j: assigned.get(j, 0) for j in inst.tasks}
        for j in order:
            for k in succ[j]:
                cand = est[j] + inst.durations[j]
                if cand > est[k]:
                    est[k] = cand
        lst = {j: assigned.get(j, inst.horizon - inst.durations[j]) for j in inst.tasks}
        lst[sink] = makespan
        for j in reversed(order):
            for k in succ[j]:
                cand = lst[k] - inst.durations[j]
                if cand < lst[j]:
                    lst[j] = cand
            if j in assigned:
                lst[j] = min(lst[j], assigned[j])
        for j in inst.tasks:
            bound = assigned.get(j)
            if bound is not None and (est[j] > bound or lst[j] < bound):
                return None
            if est[j] > lst[j]:
                return None
        return est, lst

    def dfs(idx: int) -> bool:
        search.tick()
        win = windows()
        if win is None:
            return False
        est, lst = win
        if idx == len(real):
            return True
        j = real[idx]
        if j in assigned:
            return dfs(idx + 1)
        for t in range(est[j], lst[j] + 1):
            if not search.fits(j, t):
                continue
            assigned[j] = t
            search.place(j, t, +1)
            if dfs(idx + 1):
                search.place(j, t, -1)  # leave `assigned` complete for the caller
                return True
            search.place(j, t, -1)
            del assigned[j]
        return False

    try:
        found = dfs(0)
    finally:
        for j, t in pinned_real:
            search.place(j, t, -1)
    if not found:
        return None
    return {j: assigned[j] for j in inst.tasks}


def brute_force_solve(
    inst: Instance, fixed: FixedAssignments | Mapping[int, int] | None = None
) -> SolveResult:
    """Exhaustive enumeration oracle for small instances.

    Walks every start vector inside the precedence-consistent ranges,
    dropping prefixes that already overload a resource (demand only ever
    grows) or already reach the incumbent makespan, and accepts a vector
    only after ``check_schedule`` passes. Guard rail: at most 7 real
    tasks and a horizon of at most 20.
    """
    if inst.n_real > 7 or inst.horizon > 20:
        raise ValueError("brute force is limited to 7 real tasks and horizon 20")
    report = validate_instance(inst)
    if not report.ok:
        raise InvalidInstanceError(report)
    entries = _fixed_entries(fixed)
    _check_fixed(inst, entries)

    started = time.perf_counter()
    sink = inst.sink
    order = [j for j in topological_order(inst.tasks, inst.precedences) if j in set(inst.real_tasks)]
    real_pred = {j: sorted(i for i in inst.predecessors(j) if i != SOURCE) for j in inst.real_tasks}
    usage = {r: [0] * inst.horizon for r in inst.resources}
    nodes = 0

    best_makespan: int | None = None
    best_starts: dict[int, int] | None = None
    starts: dict[int, int] = {}

    def overloaded(j: int, t: int) -> bool:
        row = inst.requirements[j]
        for step in range(t, t + inst.durations[j]):
            for r in inst.resources:
                if row[r] and usage[r][step] + row[r] > inst.capacities[r]:
                    return True
        return False

    def consider_complete(max_finish: int):
        nonlocal best_makespan, best_starts
        candidate = {SOURCE: 0, sink: entries.get(sink, max_finish)}
        candidate.update(starts)
        mk = candidate[sink]
        if best_makespan is not None and mk >= best_makespan:
            return
        sched = Schedule.of(inst, candidate)
        if check_schedule(inst, sched, entries).ok:
            best_makespan = mk
            best_starts = candidate

    def enumerate_from(pos: int, max_finish: int):
        nonlocal nodes
        nodes += 1
        if best_makespan is not None and max_finish >= best_makespan:
            return
        if pos == len(order):
            consider_complete(max_finish)
            return
        j = order[pos]
        est = 0
        for i in real_pred[j]:
            est = max(est, starts[i] + inst.durations[i])
        lo, hi = est, inst.horizon - inst.durations[j]
        if j in entries:
            lo = hi = entries[j]
            if entries[j] < est:
                return
        for t in range(lo, hi + 1):
            if best_makespan is not None and max(max_finish, t + inst.durations[j]) >= best_makespan:
                break
            if overloaded(j, t):
                continue
            starts[j] = t
            _apply(inst, usage, j, t, +1)
            enumerate_from(pos + 1, max(max_finish, t + inst.durations[j]))
            _apply(inst, usage, j, t, -1)
            del starts[j]

    enumerate_from(0, 0)
    elapsed = time.perf_counter() - started
    if best_starts is None:
        return SolveResult("infeasible", None, nodes, elapsed)
    return SolveResult("optimal", Schedule.of(inst, best_starts), nodes, elapsed)


def _apply(inst: Instance, usage: dict[int, list[int]], task: int, start: int, sign: int):
    row = inst.requirements[task]
    for t in range(start, start + inst.durations[task]):
        for r in inst.resources:
            if row[r]:
                usage[r][t] += sign * row[r]
