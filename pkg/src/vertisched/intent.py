"""Request categorization, validation, and the interactive clarification dialogue.

A reschedule request arrives as a structured tuple whose scope and
precedence flags may each be unknown. The dialogue machine seeds the
decision tree with whatever flags are decided, then asks the operator
one yes/no question per still-unknown symbol until an operation label
derives. Every exchange is appended to a transcript log whose rendered
text is the canonical interaction record.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from .logic import DecisionTreeState, EvalOutcome, TriState, tree_assign, tree_eval, tree_init, tree_release
from .model import Instance, Schedule

QUESTION_SCOPE = (
    "Do you want the new schedule to optimize by affecting other tasks' start times? "
    "Yes for 1; no for 0."
)
QUESTION_PRECEDENCE = (
    "Do you want the task to depend on others while maintaining precedence? "
    "Yes for 1; no for 0."
)
ANSWER_PROMPT = "?[1, 0]:"

# symbol 1 carries the scope flag, symbol 2 the precedence flag
TREE_DEPTH = 2


class DegenerateRequestError(ValueError):
    """The request changes neither the start time nor any resource amount."""


class RequestType(str, Enum):
    START = "s"
    RESOURCE = "r"


@dataclass(frozen=True)
class RescheduleRequest:
    """A single-task reschedule wish with tri-state ambiguity flags.

    ``delta``/``rho`` are the scope/precedence flags of a start-time
    change, ``eta``/``theta`` those of a resource-amount change. A flag
    left unknown triggers a clarification question once the request's
    type selects its pair.
    """

    target: int
    desired_start: int | None = None
    desired_resources: dict[int, int] = field(default_factory=dict)
    delta: TriState = TriState.UNKNOWN
    rho: TriState = TriState.UNKNOWN
    eta: TriState = TriState.UNKNOWN
    theta: TriState = TriState.UNKNOWN

    def echo(self) -> dict:
        return {
            "target": self.target,
            "desired_start": self.desired_start,
            "desired_resources": dict(sorted(self.desired_resources.items())),
            "delta": self.delta.value,
            "rho": self.rho.value,
            "eta": self.eta.value,
            "theta": self.theta.value,
        }


@dataclass(frozen=True)
class IntentVector:
    b_s1: TriState = TriState.UNKNOWN
    b_s2: TriState = TriState.UNKNOWN
    b_r1: TriState = TriState.UNKNOWN
    b_r2: TriState = TriState.UNKNOWN

    def pair(self, gamma: RequestType) -> tuple[TriState, TriState]:
        if gamma is RequestType.START:
            return self.b_s1, self.b_s2
        return self.b_r1, self.b_r2

    def with_pair(self, gamma: RequestType, b1: TriState, b2: TriState) -> "IntentVector":
        if gamma is RequestType.START:
            return replace(self, b_s1=b1, b_s2=b2)
        return replace(self, b_r1=b1, b_r2=b2)


@dataclass(frozen=True)
class ValidityResult:
    verdict: str  # valid_request | invalid_task | invalid_time | invalid_resource | invalid_amount
    atoms: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.verdict == "valid_request"


@dataclass
class HistoryEvent:
    symbol: int
    question: str
    answer: str | None  # None while the question is still pending


@dataclass(frozen=True)
class IntentConfig:
    time_limit: float = 300.0
    answer_wait: float = 60.0
    clock: Callable[[], float] = time.monotonic

    def __post_init__(self):
        if self.time_limit <= 0 or self.answer_wait <= 0:
            raise ValueError("interaction budgets must be positive")


def categorize_request(baseline: Schedule, inst: Instance, req: RescheduleRequest) -> RequestType:
    """Resource-focused when any requirement of the target would change, else start-focused."""
    real = set(inst.real_tasks)
    if req.target not in real:
        # let the validators produce the invalid_task verdict
        return RequestType.RESOURCE if req.desired_resources else RequestType.START
    changes_resources = any(
        inst.requirements[req.target].get(r, 0) != amount for r, amount in req.desired_resources.items()
    )
    changes_time = req.desired_start is not None and req.desired_start != baseline.starts[req.target]
    if changes_resources:
        return RequestType.RESOURCE
    if changes_time:
        return RequestType.START
    raise DegenerateRequestError(f"request for task {req.target} changes nothing")


def validate_time_request(inst: Instance, task: int, time_value: int) -> ValidityResult:
    atoms = [f"request({task},{time_value})"]
    valid_task = task in set(inst.real_tasks)
    valid_time = 0 <= time_value <= inst.total_duration()
    if valid_task and valid_time:
        verdict = "valid_request"
        atoms.append("result(valid_request)")
    elif valid_time:
        verdict = "invalid_task"
        atoms.append("result(invalid_task)")
    elif valid_task:
        verdict = "invalid_time"
        atoms.append("result(invalid_time)")
    else:
        # neither result rule fires when both legs fail; report the task first
        verdict = "invalid_task"
    return ValidityResult(verdict=verdict, atoms=tuple(atoms))


def validate_resource_request(inst: Instance, task: int, resource: int, amount: int) -> ValidityResult:
    atoms = [f"request({task},{resource},{amount})"]
    real = set(inst.real_tasks)
    valid_task = task in real
    demands = [inst.requirements[j].get(resource, 0) for j in real]
    limit = max((u for u in demands if u > 0), default=None)
    valid_resource = limit is not None
    valid_amount = limit is not None and amount <= limit
    if valid_task and valid_resource and valid_amount:
        atoms.append("result(valid_request)")
        return ValidityResult(verdict="valid_request", atoms=tuple(atoms))
    verdict = None
    for ok, name in ((valid_task, "invalid_task"), (valid_resource, "invalid_resource"), (valid_amount, "invalid_amount")):
        if not ok:
            atoms.append(f"result({name})")
            verdict = verdict or name
    return ValidityResult(verdict=verdict, atoms=tuple(atoms))


def question_text(symbol: int, gamma: RequestType) -> str:
    if symbol == 1:
        return QUESTION_SCOPE
    if symbol == 2:
        return QUESTION_PRECEDENCE
    raise ValueError(f"no question for symbol {symbol}")


def parse_answer(text: str) -> TriState | None:
    """'1' is yes, '0' is no; anything else is invalid and re-asked."""
    stripped = text.strip()
    if stripped == "1":
        return TriState.TRUE
    if stripped == "0":
        return TriState.FALSE
    return None


# ---------------------------------------------------------------------------
# dialogue machine


class DialogueState(str, Enum):
    AWAITING_ANSWER = "awaiting-answer"
    DONE = "done"
    INVALID = "invalid"
    TIMEOUT = "timeout"

    @property
    def terminal(self) -> bool:
        return self is not DialogueState.AWAITING_ANSWER


class DialogueMachine:
    """Resumable clarification dialogue for one reschedule request.

    ``begin`` categorizes and validates the request, seeds the decision
    tree from the decided flags, and evaluates once. The machine then
    pauses at ``awaiting-answer`` whenever a question is posed; ``submit``
    records the operator's reply and advances. All state serializes
    through ``to_dict``/``from_dict`` so a dialogue can resume across
    processes.
    """

    def __init__(self):
        self.gamma: RequestType | None = None
        self.request_echo: dict = {}
        self.validity: ValidityResult | None = None
        self.tree: DecisionTreeState | None = None
        self.state: DialogueState = DialogueState.INVALID
        self.pending: tuple[int, str] | None = None
        self.history: list[HistoryEvent] = []
        self.log: list[tuple] = []
        self.vector = IntentVector()
        self.intent_label: str | None = None
        self.known_facts: tuple[str, ...] = ()
        self.interactions = 0

    # -- construction

    @classmethod
    def begin(cls, inst: Instance, baseline: Schedule, req: RescheduleRequest) -> "DialogueMachine":
        machine = cls()
        machine.gamma = categorize_request(baseline, inst, req)
        machine.request_echo = req.echo()
        machine.validity = _validate(inst, req, machine.gamma)
        machine.log.append(("result", "Result:" + " ".join(machine.validity.atoms)))
        if not machine.validity.ok:
            machine.state = DialogueState.INVALID
            return machine

        machine.tree = tree_init(TREE_DEPTH)
        flag1, flag2 = _gamma_flags(req, machine.gamma)
        for symbol, flag in ((1, flag1), (2, flag2)):
            if flag.decided:
                machine.tree = tree_assign(machine.tree, symbol, flag)
        machine._log_header()
        machine._advance(tree_eval(machine.tree))
        return machine

    # -- transitions

    def submit(self, answer: str) -> DialogueState:
        if self.state is not DialogueState.AWAITING_ANSWER:
            raise RuntimeError(f"dialogue is {self.state.value}, not awaiting an answer")
        symbol, question = self.pending
        if self.history and self.history[-1].answer is None:
            self.history[-1].answer = answer
        self.log.append(("answer", answer))
        value = parse_answer(answer)
        if value is None:
            self.log.append(("invalid", answer))
            self.log.append(("prompt", question))
            self.history.append(HistoryEvent(symbol=symbol, question=question, answer=None))
            return self.state
        self.tree = tree_assign(self.tree, symbol, value)
        self.pending = None
        self._advance(tree_eval(self.tree))
        return self.state

    def force_timeout(self) -> None:
        if self.state.terminal:
            return
        self.state = DialogueState.TIMEOUT
        self.pending = None

    # -- internals

    def _advance(self, outcome: EvalOutcome) -> None:
        self.log.append(("eval", _eval_payload(outcome)))
        if outcome.resolved:
            self.intent_label = outcome.intent_label
            self.known_facts = tuple(
                f'known({s},"{outcome.known[s].value}")' for s in sorted(outcome.known)
            )
            b1 = outcome.known[1]
            b2 = outcome.known[2]
            self.vector = self.vector.with_pair(self.gamma, b1, b2)
            self.state = DialogueState.DONE
            return
        for symbol in outcome.contradictions:
            self.tree = tree_release(self.tree, symbol, (TriState.TRUE, TriState.FALSE))
        question = question_text(outcome.query, self.gamma)
        self.pending = (outcome.query, question)
        self.state = DialogueState.AWAITING_ANSWER
        self._log_header()
        self.log.append(("prompt", question))
        self.history.append(HistoryEvent(symbol=outcome.query, question=question, answer=None))

    def _log_header(self) -> None:
        self.log.append(("header", self.interactions))
        self.interactions += 1

    # -- reporting

    def explanation_atoms(self) -> tuple[str, ...]:
        if self.state is DialogueState.INVALID:
            return tuple(a for a in self.validity.atoms if a.startswith("result("))
        if self.state is DialogueState.TIMEOUT:
            return ("timeout",)
        if self.state is DialogueState.DONE:
            return (f"intent({self.intent_label})",) + self.known_facts
        return ()

    def distinct_queries(self) -> int:
        return len({event.symbol for event in self.history})

    def transcript(self) -> str:
        return render_transcript(self.log)

    # -- persistence

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.value if self.gamma else None,
            "state": self.state.value,
            "request": self.request_echo,
            "validity": {"verdict": self.validity.verdict, "atoms": list(self.validity.atoms)},
            "tree": _tree_to_dict(self.tree),
            "pending": {"symbol": self.pending[0], "question": self.pending[1]} if self.pending else None,
            "history": [
                {"symbol": e.symbol, "question": e.question, "answer": e.answer} for e in self.history
            ],
            "log": [list(entry) for entry in self.log],
            "vector": {
                "b_s1": self.vector.b_s1.value,
                "b_s2": self.vector.b_s2.value,
                "b_r1": self.vector.b_r1.value,
                "b_r2": self.vector.b_r2.value,
            },
            "intent_label": self.intent_label,
            "known_facts": list(self.known_facts),
            "interactions": self.interactions,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DialogueMachine":
        machine = cls()
        machine.gamma = RequestType(doc["gamma"]) if doc["gamma"] else None
        machine.state = DialogueState(doc["state"])
        machine.request_echo = doc["request"]
        machine.validity = ValidityResult(
            verdict=doc["validity"]["verdict"], atoms=tuple(doc["validity"]["atoms"])
        )
        machine.tree = _tree_from_dict(doc["tree"])
        machine.pending = (
            (doc["pending"]["symbol"], doc["pending"]["question"]) if doc["pending"] else None
        )
        machine.history = [
            HistoryEvent(symbol=e["symbol"], question=e["question"], answer=e["answer"])
            for e in doc["history"]
        ]
        machine.log = [tuple(entry) for entry in doc["log"]]
        vec = doc["vector"]
        machine.vector = IntentVector(
            b_s1=TriState(vec["b_s1"]),
            b_s2=TriState(vec["b_s2"]),
            b_r1=TriState(vec["b_r1"]),
            b_r2=TriState(vec["b_r2"]),
        )
        machine.intent_label = doc["intent_label"]
        machine.known_facts = tuple(doc["known_facts"])
        machine.interactions = doc["interactions"]
        return machine


def _validate(inst: Instance, req: RescheduleRequest, gamma: RequestType) -> ValidityResult:
    if gamma is RequestType.START:
        return validate_time_request(inst, req.target, req.desired_start)
    parts = [
        validate_resource_request(inst, req.target, resource, amount)
        for resource, amount in sorted(req.desired_resources.items())
    ]
    if not parts:
        parts = [validate_resource_request(inst, req.target, 0, 0)]
    atoms: list[str] = []
    verdict = "valid_request"
    for part in parts:
        atoms.extend(part.atoms)
        if verdict == "valid_request" and not part.ok:
            verdict = part.verdict
    return ValidityResult(verdict=verdict, atoms=tuple(atoms))


def _gamma_flags(req: RescheduleRequest, gamma: RequestType) -> tuple[TriState, TriState]:
    if gamma is RequestType.START:
        return req.delta, req.rho
    return req.eta, req.theta


def _eval_payload(outcome: EvalOutcome) -> dict:
    return {
        "sym": [f'sym({s},"{v.value}")' for s, v in outcome.sym_facts],
        "contradiction": [f"contradiction({s})" for s in outcome.contradictions],
        "unknown": [f"unknown({s})" for s in outcome.unknowns],
        "query": f"query({outcome.query})" if outcome.query is not None else None,
        "intent": f"intent({outcome.intent_label})" if outcome.intent_label else None,
    }


def _tree_to_dict(tree: DecisionTreeState | None) -> dict | None:
    if tree is None:
        return None
    return {
        "n": tree.n,
        "order": {str(s): r for s, r in sorted(tree.order.items())},
        "externals": {
            str(s): sorted(v.value for v in values) for s, values in sorted(tree.externals.items()) if values
        },
    }


def _tree_from_dict(doc: dict | None) -> DecisionTreeState | None:
    if doc is None:
        return None
    return DecisionTreeState(
        n=doc["n"],
        order={int(s): r for s, r in doc["order"].items()},
        externals={
            int(s): frozenset(TriState(v) for v in values) for s, values in doc["externals"].items()
        },
    )


def render_transcript(log: list[tuple]) -> str:
    """Render the interaction log in its canonical plain-text shape."""
    lines: list[str] = []
    for entry in log:
        kind = entry[0]
        if kind == "result":
            lines.append(entry[1])
        elif kind == "header":
            lines.append("")
            lines.append(f"===== interaction #{entry[1]:02d} =====")
        elif kind == "eval":
            payload = entry[1]
            if payload["sym"]:
                lines.append("sym: [" + ", ".join(payload["sym"]) + "]")
            if payload["contradiction"]:
                lines.append("contradiction: [" + ", ".join(payload["contradiction"]) + "]")
            if payload["unknown"]:
                lines.append("unknown: [" + ", ".join(payload["unknown"]) + "]")
            if payload["query"]:
                lines.append("query: [" + payload["query"] + "]")
            if payload["intent"]:
                lines.append("intent: [" + payload["intent"] + "]")
        elif kind == "prompt":
            lines.append(entry[1])
        elif kind == "answer":
            lines.append(ANSWER_PROMPT + entry[1])
        elif kind == "invalid":
            lines.append("Invalid answer: " + entry[1])
            lines.append("")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# blocking interpretation loop

Responder = Callable[[int, str, float], "str | None"]


@dataclass
class IntentOutcome:
    vector: IntentVector
    gamma: RequestType
    status: str  # intent | invalid | timeout
    machine: DialogueMachine


def interpret_intention(
    baseline: Schedule,
    inst: Instance,
    req: RescheduleRequest,
    responder: Responder,
    cfg: IntentConfig | None = None,
) -> IntentOutcome:
    """Run the clarification dialogue to completion against a blocking responder.

    The responder is called with (symbol, question, wait) and may block up
    to ``wait`` before returning the raw answer text, or None when no
    answer arrived in time. A responder that raises is treated like a
    dialogue that timed out.
    """
    cfg = cfg or IntentConfig()
    machine = DialogueMachine.begin(inst, baseline, req)
    base = cfg.clock()
    while machine.state is DialogueState.AWAITING_ANSWER:
        if cfg.clock() - base >= cfg.time_limit:
            machine.force_timeout()
            break
        symbol, question = machine.pending
        try:
            answer = responder(symbol, question, cfg.answer_wait)
        except Exception:
            machine.force_timeout()
            break
        if answer is None:
            continue  # the wait elapsed unanswered; the budget check loops
        machine.submit(answer)
    return IntentOutcome(
        vector=machine.vector,
        gamma=machine.gamma,
        status=_status_of(machine.state),
        machine=machine,
    )


def _status_of(state: DialogueState) -> str:
    return {
        DialogueState.DONE: "intent",
        DialogueState.INVALID: "invalid",
        DialogueState.TIMEOUT: "timeout",
    }[state]


def machine_outcome(machine: DialogueMachine) -> IntentOutcome:
    """Wrap a terminal dialogue machine in the interpretation result shape."""
    if not machine.state.terminal:
        raise ValueError("dialogue has not terminated yet")
    return IntentOutcome(
        vector=machine.vector,
        gamma=machine.gamma,
        status=_status_of(machine.state),
        machine=machine,
    )
