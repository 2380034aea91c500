"""Three-valued truth values and the symbol decision tree behind intent clarification.

The tree tracks externally asserted facts per boolean symbol and derives,
on evaluation, the chain unknown / observed / assumed / known. A symbol is
known once exactly one value is asserted; asserting both values is a
contradiction that reverts the symbol to unknown until released. When
every symbol is known the evaluation emits an operation label whose digits
read the symbol values from highest to lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class TriState(Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @classmethod
    def from_bool(cls, value: bool) -> "TriState":
        return cls.TRUE if value else cls.FALSE

    @classmethod
    def from_digit(cls, digit: int | None) -> "TriState":
        if digit is None:
            return cls.UNKNOWN
        if digit in (0, 1):
            return cls.from_bool(bool(digit))
        raise ValueError(f"flag digit must be 0, 1 or absent, got {digit!r}")

    @property
    def decided(self) -> bool:
        return self is not TriState.UNKNOWN

    @property
    def digit(self) -> str:
        if not self.decided:
            raise ValueError("undecided value has no digit")
        return "1" if self is TriState.TRUE else "0"

    def as_bool(self) -> bool:
        if not self.decided:
            raise ValueError("undecided value is not a boolean")
        return self is TriState.TRUE


@dataclass(frozen=True)
class DecisionTreeState:
    """Asserted external facts for symbols 1..n, plus the query order."""

    n: int
    order: dict[int, int]  # symbol -> rank; queries pick the lowest rank
    externals: dict[int, frozenset[TriState]]

    def asserted(self, symbol: int) -> frozenset[TriState]:
        return self.externals.get(symbol, frozenset())


@dataclass(frozen=True)
class EvalOutcome:
    """Result of one tree evaluation: either an intent or the next query."""

    intent_label: str | None
    known: dict[int, TriState]
    query: int | None
    unknowns: tuple[int, ...]
    contradictions: tuple[int, ...]
    sym_facts: tuple[tuple[int, TriState], ...]

    @property
    def resolved(self) -> bool:
        return self.intent_label is not None


def tree_init(n: int, order: dict[int, int] | None = None) -> DecisionTreeState:
    if n < 1:
        raise ValueError("symbol count must be at least 1")
    if order is None:
        order = {s: s for s in range(1, n + 1)}
    if sorted(order) != list(range(1, n + 1)) or sorted(order.values()) != list(range(1, n + 1)):
        raise ValueError(f"order must be a bijection of 1..{n}")
    return DecisionTreeState(n=n, order=dict(order), externals={})


def tree_assign(state: DecisionTreeState, symbol: int, value: TriState) -> DecisionTreeState:
    _check_symbol(state, symbol)
    if value not in (TriState.TRUE, TriState.FALSE):
        raise ValueError("only true/false can be asserted")
    externals = dict(state.externals)
    externals[symbol] = state.asserted(symbol) | {value}
    return DecisionTreeState(n=state.n, order=state.order, externals=externals)


def tree_release(state: DecisionTreeState, symbol: int, values) -> DecisionTreeState:
    _check_symbol(state, symbol)
    externals = dict(state.externals)
    externals[symbol] = state.asserted(symbol) - frozenset(values)
    return DecisionTreeState(n=state.n, order=state.order, externals=externals)


def tree_eval(state: DecisionTreeState) -> EvalOutcome:
    known: dict[int, TriState] = {}
    unknowns: list[int] = []
    contradictions: list[int] = []
    sym_facts: list[tuple[int, TriState]] = []

    for symbol in range(1, state.n + 1):
        asserted = state.asserted(symbol)
        for value in (TriState.TRUE, TriState.FALSE):
            if value in asserted:
                sym_facts.append((symbol, value))
        contradiction = TriState.TRUE in asserted and TriState.FALSE in asserted
        if contradiction:
            contradictions.append(symbol)
        if not asserted or contradiction:
            unknowns.append(symbol)
            continue
        # observed(v) with the opposite absent: assumed, hence known
        value = next(iter(asserted))
        known[symbol] = value
    assert not any(
        s in known and known[s] is TriState.TRUE and TriState.FALSE in state.asserted(s)
        for s in known
    ), "a symbol can never be known with both values"

    if unknowns:
        rank = min(state.order[s] for s in unknowns)
        query = next(s for s in unknowns if state.order[s] == rank)
        return EvalOutcome(
            intent_label=None,
            known=known,
            query=query,
            unknowns=tuple(unknowns),
            contradictions=tuple(contradictions),
            sym_facts=tuple(sym_facts),
        )

    digits = "".join(known[s].digit for s in range(state.n, 0, -1))
    return EvalOutcome(
        intent_label=f"op_{digits}",
        known=known,
        query=None,
        unknowns=(),
        contradictions=(),
        sym_facts=tuple(sym_facts),
    )


def _check_symbol(state: DecisionTreeState, symbol: int) -> None:
    if symbol not in range(1, state.n + 1):
        raise ValueError(f"unknown symbol {symbol}; expected 1..{state.n}")
