"""Constraint surgery, fixed-task selection, re-solving, and explanation assembly.

The preprocessing stage turns a clarified request into a modified
instance: requirement row updates for resource requests, precedence
surgery around the target when ordering is relaxed, and a set of tasks
pinned to start times before the solver runs. Local-scope requests
additionally try to pin the target's neighbours at their baseline
starts, keeping each pin only when the pinned set stays within
capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .intent import (
    DegenerateRequestError,
    IntentConfig,
    IntentOutcome,
    RequestType,
    RescheduleRequest,
    Responder,
    interpret_intention,
)
from .logic import TriState
from .model import Instance, Schedule, check_schedule, make_instance
from .solver import FixedAssignments, SolveConfig, SolveResult, solve

FIX_SCOPES = ("predecessors", "all-nonflex")


@dataclass(frozen=True)
class ModifiedInstance:
    """Solver-ready surgery output: revised edges, requirements, pinned tasks."""

    precedences: frozenset[tuple[int, int]]  # real-task pairs after surgery
    requirements: dict[int, dict[int, int]]
    fixed: FixedAssignments
    base: Instance
    narrative: dict = field(default_factory=dict, compare=False)

    def to_instance(self) -> Instance:
        real_req = {j: dict(self.requirements[j]) for j in self.base.real_tasks}
        return make_instance(
            {j: self.base.durations[j] for j in self.base.real_tasks},
            real_req,
            dict(self.base.capacities),
            set(self.precedences),
            self.base.horizon,
        )


@dataclass(frozen=True)
class Infeasible:
    reason: str  # predecessor-finish | fixed-set-resources
    detail: str


PreprocessOutcome = ModifiedInstance | Infeasible


@dataclass
class Explanation:
    """Structured justification of a rescheduling outcome."""

    request: dict
    validity_atoms: tuple[str, ...] = ()
    intent_label: str | None = None
    known_facts: tuple[str, ...] = ()
    transcript: str = ""
    preprocessing: dict | None = None
    outcome: dict | None = None
    failure: str | None = None

    def to_dict(self) -> dict:
        return {
            "request": self.request,
            "validity_atoms": list(self.validity_atoms),
            "intent_label": self.intent_label,
            "known_facts": list(self.known_facts),
            "transcript": self.transcript,
            "preprocessing": self.preprocessing,
            "outcome": self.outcome,
            "failure": self.failure,
        }

    def render_text(self) -> str:
        lines: list[str] = []
        if self.failure and not self.intent_label:
            lines.append(self.failure)
        if self.validity_atoms:
            lines.append("Validity: " + " ".join(self.validity_atoms))
        if self.intent_label:
            lines.append(f"Interpreted intent: intent({self.intent_label}) " + " ".join(self.known_facts))
        if self.preprocessing:
            pre = self.preprocessing
            if pre["edges_removed"] or pre["edges_added"]:
                lines.append(
                    "Precedence surgery: removed "
                    + _edges_text(pre["edges_removed"])
                    + ", added "
                    + _edges_text(pre["edges_added"])
                )
            pins = ", ".join(f"task {t} at {e['time']} ({e['reason']})" for t, e in sorted(pre["fixed"].items()))
            lines.append("Pinned tasks: " + (pins or "none"))
            if pre["conflicts"]:
                lines.append("Conflicting tasks at the requested placement: " + _ids_text(pre["conflicts"]))
        if self.outcome:
            lines.append(
                f"Makespan {self.outcome['makespan_before']} -> {self.outcome['makespan_after']}"
            )
            moved = {
                t: d for t, d in self.outcome["start_deltas"].items() if d["before"] != d["after"]
            }
            if moved:
                lines.append(
                    "Moved tasks: "
                    + ", ".join(
                        f"{t}: {d['before']} -> {d['after']}"
                        for t, d in sorted(moved.items(), key=lambda kv: int(kv[0]))
                    )
                )
        if self.failure and self.intent_label:
            lines.append(self.failure)
        return "\n".join(lines) + "\n"


@dataclass
class RescheduleResult:
    status: str  # ok | invalid-request | interaction-timeout | infeasible | solver-timeout
    schedule: Schedule | None
    explanation: Explanation

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "schedule": (
                {"starts": {str(t): s for t, s in sorted(self.schedule.starts.items())}, "makespan": self.schedule.makespan}
                if self.schedule
                else None
            ),
            "explanation": self.explanation.to_dict(),
        }


@dataclass(frozen=True)
class DispatchConfig:
    intent: IntentConfig = field(default_factory=IntentConfig)
    solve: SolveConfig = field(default_factory=SolveConfig)
    fix_scope: str = "predecessors"

    def __post_init__(self):
        if self.fix_scope not in FIX_SCOPES:
            raise ValueError(f"fix_scope must be one of {FIX_SCOPES}")


def build_successor_map(precedences: frozenset[tuple[int, int]] | set[tuple[int, int]]) -> dict[int, set[int]]:
    """Successor lookup for every task appearing in the pair set."""
    succ: dict[int, set[int]] = {}
    for (i, j) in precedences:
        succ.setdefault(i, set()).add(j)
        succ.setdefault(j, set())
    return succ


def check_total_conflicts(
    t_star: int,
    tau_star: int,
    inst: Instance,
    u_prime: dict[int, dict[int, int]],
    baseline: Schedule,
) -> set[int]:
    """Baseline tasks that overload a resource while the target runs at its new time.

    Simulates every other task at its baseline start plus the target at
    ``tau_star`` under the revised requirements; at each overloaded step
    every positive-demand contributor other than the target is conflicted.
    """
    duration = inst.durations[t_star]
    if tau_star + duration > inst.horizon:
        raise ValueError("target placement exceeds the horizon")
    conflicts: set[int] = set()
    for step in range(tau_star, tau_star + duration):
        active = [
            j
            for j in inst.real_tasks
            if j != t_star and baseline.starts[j] <= step < baseline.starts[j] + inst.durations[j]
        ]
        for r in inst.resources:
            demand = u_prime[t_star][r] + sum(u_prime[j][r] for j in active)
            if demand > inst.capacities[r]:
                conflicts.update(j for j in active if u_prime[j][r] > 0)
    return conflicts


def propagate_flexibility(conflicts: set[int], succ_map: dict[int, set[int]]) -> set[int]:
    """Conflicted tasks plus everything downstream of them."""
    flexible = set(conflicts)
    stack = list(conflicts)
    while stack:
        j = stack.pop()
        for k in succ_map.get(j, ()):
            if k not in flexible:
                flexible.add(k)
                stack.append(k)
    return flexible


def check_resource_feasibility(
    fixed: dict[int, int] | FixedAssignments,
    u_prime: dict[int, dict[int, int]],
    inst: Instance,
) -> bool:
    """True when the pinned tasks alone stay within every capacity at every step."""
    entries = dict(fixed.items()) if isinstance(fixed, FixedAssignments) else dict(fixed)
    for j, t in entries.items():
        if t < 0 or t + inst.durations[j] > inst.horizon:
            return False
    for r in inst.resources:
        profile = [0] * inst.horizon
        for j, t in entries.items():
            for step in range(t, t + inst.durations[j]):
                profile[step] += u_prime[j][r]
                if profile[step] > inst.capacities[r]:
                    return False
    return True


def preprocess(
    t_star: int,
    tau_star: int,
    r_star: dict[int, int],
    gamma: RequestType,
    b1: bool,
    b2: bool,
    inst: Instance,
    baseline: Schedule,
    fix_scope: str = "predecessors",
) -> PreprocessOutcome:
    """Transform the instance for re-solving according to the clarified intent.

    Requirement surgery applies only to resource requests; precedence
    surgery cuts the target out of the ordering (bridging its neighbours)
    when b2 is false; local scope (b1 false) pins conflict-free
    neighbours at their baseline starts, each kept only while the pinned
    set stays resource-feasible.
    """
    if fix_scope not in FIX_SCOPES:
        raise ValueError(f"fix_scope must be one of {FIX_SCOPES}")
    if t_star not in set(inst.real_tasks):
        raise ValueError(f"target {t_star} is not a real task")

    u_prime = {j: dict(inst.requirements[j]) for j in inst.tasks}
    if gamma is RequestType.RESOURCE:
        for r, amount in r_star.items():
            if r not in inst.capacities:
                raise ValueError(f"requested resource {r} does not exist")
            u_prime[t_star][r] = amount

    s_prime = set(inst.real_precedences())
    preds0 = sorted(i for (i, j) in s_prime if j == t_star)
    succs0 = sorted(j for (i, j) in s_prime if i == t_star)
    edges_removed: list[tuple[int, int]] = []
    edges_added: list[tuple[int, int]] = []
    if not b2:
        for i in preds0:
            s_prime.discard((i, t_star))
            edges_removed.append((i, t_star))
        for j in succs0:
            s_prime.discard((t_star, j))
            edges_removed.append((t_star, j))
        for i in preds0:
            for j in succs0:
                if (i, j) not in s_prime:
                    s_prime.add((i, j))
                    edges_added.append((i, j))

    succ_map = build_successor_map(s_prime)

    earliest = max(
        [0]
        + [
            baseline.starts[i] + inst.durations[i]
            for i in preds0
            if (i, t_star) in s_prime
        ]
    )
    if tau_star < earliest:
        return Infeasible(
            reason="predecessor-finish",
            detail=f"requested start {tau_star} precedes the earliest predecessor finish time {earliest}",
        )

    fixed: dict[int, int] = {t_star: tau_star}
    fixed_reasons: dict[int, str] = {t_star: "requested"}

    if tau_star + inst.durations[t_star] > inst.horizon:
        return Infeasible(
            reason="fixed-set-resources",
            detail=f"requested start {tau_star} pushes the target beyond the horizon {inst.horizon}",
        )

    conflicts = check_total_conflicts(t_star, tau_star, inst, u_prime, baseline)
    flexible = propagate_flexibility(conflicts, succ_map)

    if not b1:
        if fix_scope == "predecessors":
            candidates = [i for i in preds0 if i not in flexible]
        else:
            candidates = [j for j in sorted(inst.real_tasks) if j != t_star and j not in flexible]
        for i in candidates:
            trial = dict(fixed)
            trial[i] = baseline.starts[i]
            if check_resource_feasibility(trial, u_prime, inst):
                fixed = trial
                fixed_reasons[i] = "baseline-locked"

    if not check_resource_feasibility(fixed, u_prime, inst):
        return Infeasible(
            reason="fixed-set-resources",
            detail=f"final pinned set {sorted(fixed)} violates resource capacities",
        )

    return ModifiedInstance(
        precedences=frozenset(s_prime),
        requirements=u_prime,
        fixed=FixedAssignments(fixed),
        base=inst,
        narrative={
            "edges_removed": sorted(edges_removed),
            "edges_added": sorted(edges_added),
            "fixed": {t: {"time": fixed[t], "reason": fixed_reasons[t]} for t in sorted(fixed)},
            "conflicts": sorted(conflicts),
            "flexible": sorted(flexible),
        },
    )


def dispatch(
    inst: Instance,
    baseline: Schedule,
    req: RescheduleRequest,
    responder: Responder,
    cfg: DispatchConfig | None = None,
) -> RescheduleResult:
    """Run the whole pipeline: clarify, preprocess, re-solve, explain."""
    cfg = cfg or DispatchConfig()
    try:
        outcome = interpret_intention(baseline, inst, req, responder, cfg.intent)
    except DegenerateRequestError as exc:
        return RescheduleResult(
            status="invalid-request",
            schedule=None,
            explanation=Explanation(request=req.echo(), failure=str(exc)),
        )
    return complete_reschedule(inst, baseline, req, outcome, cfg)


def complete_reschedule(
    inst: Instance,
    baseline: Schedule,
    req: RescheduleRequest,
    outcome: IntentOutcome,
    cfg: DispatchConfig | None = None,
) -> RescheduleResult:
    """Post-dialogue stages shared by the blocking dispatcher and the session service."""
    cfg = cfg or DispatchConfig()
    machine = outcome.machine
    explanation = Explanation(
        request=req.echo(),
        validity_atoms=machine.validity.atoms if machine.validity else (),
        transcript=machine.transcript(),
    )

    if outcome.status == "invalid":
        explanation.failure = "request rejected: " + " ".join(machine.explanation_atoms())
        return RescheduleResult(status="invalid-request", schedule=None, explanation=explanation)
    if outcome.status == "timeout":
        explanation.failure = "interaction timed out before the intent was clarified"
        return RescheduleResult(status="interaction-timeout", schedule=None, explanation=explanation)

    explanation.intent_label = machine.intent_label
    explanation.known_facts = machine.known_facts
    b1, b2 = outcome.vector.pair(outcome.gamma)
    tau_star = req.desired_start if req.desired_start is not None else baseline.starts[req.target]

    pre = preprocess(
        req.target,
        tau_star,
        dict(req.desired_resources),
        outcome.gamma,
        b1.as_bool(),
        b2.as_bool(),
        inst,
        baseline,
        cfg.fix_scope,
    )
    if isinstance(pre, Infeasible):
        explanation.failure = f"infeasible ({pre.reason}): {pre.detail}"
        return RescheduleResult(status="infeasible", schedule=None, explanation=explanation)

    explanation.preprocessing = pre.narrative
    solved = solve(pre.to_instance(), pre.fixed, cfg.solve)
    if solved.status == "timeout":
        explanation.failure = "solver budget exhausted before optimality was proven"
        return RescheduleResult(status="solver-timeout", schedule=solved.schedule, explanation=explanation)
    if solved.status == "infeasible":
        explanation.failure = "no feasible schedule exists under the pinned assignments"
        return RescheduleResult(status="infeasible", schedule=None, explanation=explanation)

    report = check_schedule(pre.to_instance(), solved.schedule, dict(pre.fixed.items()))
    assert report.ok, f"solver returned an invalid schedule: {report.violations}"
    explanation.outcome = {
        "makespan_before": baseline.makespan,
        "makespan_after": solved.schedule.makespan,
        "start_deltas": {
            str(j): {"before": baseline.starts[j], "after": solved.schedule.starts[j]}
            for j in inst.real_tasks
        },
    }
    return RescheduleResult(status="ok", schedule=solved.schedule, explanation=explanation)


def _edges_text(edges: list) -> str:
    if not edges:
        return "none"
    return ", ".join(f"({i},{j})" for i, j in edges)


def _ids_text(ids: list) -> str:
    return ", ".join(str(i) for i in ids) if ids else "none"
