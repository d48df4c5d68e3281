"""Fault trees: a small DSL, and compilation into Bayesian-network fragments.

A tree is a set of basic events (each bound to a health variable and a set of
states counted as "failed") combined by AND / OR / K-of-N gates. Gates are
monotone by construction; NOT is deliberately absent. Compilation produces one
binary (ok / failed) variable per basic event and per gate, with fully
deterministic CPTs: the event variables indicate whether their health variable
sits in a failed state, and each gate variable realises its gate's Boolean
truth table.

Text format (one statement per line, `#` starts a comment):

    tree <name>
    event <id> binds <variable-id> failed {<state>[, <state>]*}
    gate <id> = AND(<ref>[, <ref>]*) | OR(<ref>[, <ref>]*) | KOFN(<k>; <ref>[, <ref>]*)
    top <gate-id>

Identifiers match ``[A-Za-z_][A-Za-z0-9_.]*``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .pgm import BayesNet, Cpt, Posterior, Variable, infer

OK, FAILED = "ok", "failed"
EVENT_STATES = (OK, FAILED)

GATE_KINDS = ("AND", "OR", "KOFN")


class FaultTreeError(Exception):
    """Base class for fault-tree errors."""


class FaultTreeSyntaxError(FaultTreeError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownReferenceError(FaultTreeError):
    def __init__(self, name: str, line: int):
        super().__init__(f"line {line}: unknown reference {name!r}")
        self.name = name
        self.line = line


class CycleError(FaultTreeError):
    pass


class UnboundEventError(FaultTreeError):
    pass


class MergeConflictError(FaultTreeError):
    pass


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str  # AND | OR | KOFN
    inputs: tuple[str, ...]
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise FaultTreeError(f"gate {self.id!r}: unknown kind {self.kind!r}")
        if not self.inputs:
            raise FaultTreeError(f"gate {self.id!r} needs at least one input")
        if self.kind == "KOFN":
            if self.k is None or not (1 <= self.k <= len(self.inputs)):
                raise FaultTreeError(
                    f"gate {self.id!r}: k must satisfy 1 <= k <= {len(self.inputs)}, got {self.k}"
                )
        elif self.k is not None:
            raise FaultTreeError(f"gate {self.id!r}: k only applies to KOFN gates")

    def fires(self, failed_inputs: Sequence[bool]) -> bool:
        n = sum(bool(b) for b in failed_inputs)
        if self.kind == "AND":
            return n == len(self.inputs)
        if self.kind == "OR":
            return n >= 1
        return n >= (self.k or 0)


@dataclass(frozen=True)
class EventBinding:
    """Which states of which health variable count as this event having failed."""

    variable: str
    failed_states: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "failed_states", frozenset(self.failed_states))
        if not self.failed_states:
            raise FaultTreeError("failed-state set must be nonempty")


@dataclass(frozen=True)
class FaultTree:
    name: str
    top: str
    events: tuple[str, ...]
    gates: tuple[Gate, ...]
    bindings: Mapping[str, EventBinding] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "bindings", dict(self.bindings))
        ids = list(self.events) + [g.id for g in self.gates]
        if len(set(ids)) != len(ids):
            raise FaultTreeError(f"tree {self.name!r} has duplicate event/gate ids")
        known = set(ids)
        gate_ids = {g.id for g in self.gates}
        for g in self.gates:
            for ref in g.inputs:
                if ref not in known:
                    raise FaultTreeError(f"gate {g.id!r} references undeclared {ref!r}")
        if self.top not in gate_ids:
            raise FaultTreeError(f"top {self.top!r} is not a declared gate")
        _check_acyclic(self.gates)

    def gate(self, gate_id: str) -> Gate:
        for g in self.gates:
            if g.id == gate_id:
                return g
        raise KeyError(gate_id)

    def evaluate(self, failed_events: Mapping[str, bool]) -> dict[str, bool]:
        """Boolean evaluation of every gate from a full event assignment."""
        values: dict[str, bool] = {e: bool(failed_events[e]) for e in self.events}
        pending = list(self.gates)
        while pending:
            progressed = False
            for g in list(pending):
                if all(ref in values for ref in g.inputs):
                    values[g.id] = g.fires([values[ref] for ref in g.inputs])
                    pending.remove(g)
                    progressed = True
            if not progressed:  # unreachable for a validated tree
                raise CycleError(f"tree {self.name!r}: unresolvable gate ordering")
        return values


def _check_acyclic(gates: Sequence[Gate]) -> None:
    gate_map = {g.id: g for g in gates}
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(gid: str, trail: list[str]) -> None:
        if state.get(gid) == 2:
            return
        if state.get(gid) == 1:
            cycle = trail[trail.index(gid):] + [gid]
            raise CycleError(f"cycle detected through gate {gid!r}: {' -> '.join(cycle)}")
        state[gid] = 1
        for ref in gate_map[gid].inputs:
            if ref in gate_map:
                visit(ref, trail + [gid])
        state[gid] = 2

    for g in gates:
        visit(g.id, [])


# --- parser -----------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_NUMBER = re.compile(r"[0-9]+")
_PUNCT = ("(", ")", "{", "}", ",", ";", "=")

KEYWORDS = ("tree", "event", "binds", "failed", "gate", "top")


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | number | punct | end
    text: str
    line: int
    column: int


def _tokenize_line(text: str, line_no: int) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "#":
            break
        if ch.isspace():
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append(_Token("punct", ch, line_no, i + 1))
            i += 1
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(_Token("ident", m.group(), line_no, i + 1))
            i = m.end()
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(_Token("number", m.group(), line_no, i + 1))
            i = m.end()
            continue
        raise FaultTreeSyntaxError(f"unexpected character {ch!r}", line_no, i + 1)
    tokens.append(_Token("end", "", line_no, len(text) + 1))
    return tokens


class _LineParser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, kind: str, text: str | None = None) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != kind or (text is not None and tok.text != text):
            expected = text if text is not None else kind
            found = tok.text if tok.kind != "end" else "end of line"
            raise FaultTreeSyntaxError(f"expected {expected!r}, found {found!r}", tok.line, tok.column)
        self.pos += 1
        return tok

    def take_ident(self) -> _Token:
        tok = self.take("ident")
        return tok

    def done(self) -> None:
        tok = self.peek()
        if tok.kind != "end":
            raise FaultTreeSyntaxError(f"trailing input {tok.text!r}", tok.line, tok.column)


def parse_fault_tree(text: str) -> FaultTree:
    """Parse the DSL into a validated FaultTree (bindings included)."""
    name: str | None = None
    top: str | None = None
    top_line = 0
    events: list[str] = []
    bindings: dict[str, EventBinding] = {}
    gates: list[Gate] = []
    declared: dict[str, int] = {}  # id -> line (events and gates)
    refs: list[tuple[str, int]] = []  # gate input references to resolve

    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(raw, line_no)
        if tokens[0].kind == "end":
            continue
        p = _LineParser(tokens)
        head = p.take("ident")
        if head.text == "tree":
            if name is not None:
                raise FaultTreeSyntaxError("duplicate tree statement", line_no, head.column)
            name = p.take_ident().text
            p.done()
        elif head.text == "event":
            ev = p.take_ident()
            if ev.text in declared:
                raise FaultTreeSyntaxError(f"duplicate id {ev.text!r}", line_no, ev.column)
            p.take("ident", "binds")
            var = p.take_ident().text
            p.take("ident", "failed")
            p.take("punct", "{")
            states = [p.take_ident().text]
            while p.peek().text == ",":
                p.take("punct", ",")
                states.append(p.take_ident().text)
            p.take("punct", "}")
            p.done()
            declared[ev.text] = line_no
            events.append(ev.text)
            bindings[ev.text] = EventBinding(var, frozenset(states))
        elif head.text == "gate":
            g = p.take_ident()
            if g.text in declared:
                raise FaultTreeSyntaxError(f"duplicate id {g.text!r}", line_no, g.column)
            p.take("punct", "=")
            kind_tok = p.take_ident()
            if kind_tok.text not in GATE_KINDS:
                raise FaultTreeSyntaxError(
                    f"unknown gate kind {kind_tok.text!r}", line_no, kind_tok.column
                )
            p.take("punct", "(")
            k: int | None = None
            if kind_tok.text == "KOFN":
                k_tok = p.take("number")
                k = int(k_tok.text)
                p.take("punct", ";")
            inputs = []
            tok = p.take_ident()
            inputs.append(tok.text)
            refs.append((tok.text, line_no))
            while p.peek().text == ",":
                p.take("punct", ",")
                tok = p.take_ident()
                inputs.append(tok.text)
                refs.append((tok.text, line_no))
            p.take("punct", ")")
            p.done()
            if kind_tok.text == "KOFN" and not (1 <= (k or 0) <= len(inputs)):
                raise FaultTreeSyntaxError(
                    f"k={k} out of range for {len(inputs)} inputs", line_no, kind_tok.column
                )
            declared[g.text] = line_no
            gates.append(Gate(g.text, kind_tok.text, tuple(inputs), k))
        elif head.text == "top":
            if top is not None:
                raise FaultTreeSyntaxError("duplicate top statement", line_no, head.column)
            top_tok = p.take_ident()
            top, top_line = top_tok.text, line_no
            p.done()
        else:
            raise FaultTreeSyntaxError(
                f"expected one of {', '.join(KEYWORDS)}, found {head.text!r}",
                line_no,
                head.column,
            )

    if name is None:
        raise FaultTreeSyntaxError("missing tree statement", 1, 1)
    if top is None:
        raise FaultTreeSyntaxError("missing top statement", 1, 1)

    for ref, line in refs:
        if ref not in declared:
            raise UnknownReferenceError(ref, line)
    gate_ids = {g.id for g in gates}
    if top not in gate_ids:
        raise UnknownReferenceError(top, top_line)

    return FaultTree(name, top, tuple(events), tuple(gates), bindings)


def format_fault_tree(tree: FaultTree) -> str:
    """Canonical text for a tree; parse(format(tree)) is structurally identical."""
    lines = [f"tree {tree.name}"]
    for ev in tree.events:
        b = tree.bindings[ev]
        states = ", ".join(sorted(b.failed_states))
        lines.append(f"event {ev} binds {b.variable} failed {{{states}}}")
    for g in tree.gates:
        args = ", ".join(g.inputs)
        if g.kind == "KOFN":
            lines.append(f"gate {g.id} = KOFN({g.k}; {args})")
        else:
            lines.append(f"gate {g.id} = {g.kind}({args})")
    lines.append(f"top {tree.top}")
    return "\n".join(lines) + "\n"


# --- compilation ------------------------------------------------------------


@dataclass(frozen=True)
class BnFragment:
    """Variables and CPTs produced from one tree; parents may reference
    health variables declared elsewhere."""

    variables: tuple[Variable, ...]
    cpts: tuple[Cpt, ...]
    top: str

    def to_net(self, health_variables: Iterable[Variable], health_cpts: Iterable[Cpt]) -> BayesNet:
        """Close the fragment over its health variables into a full network."""
        health_variables = tuple(health_variables)
        own = {v.id for v in self.variables}
        for v in health_variables:
            if v.id in own:
                raise MergeConflictError(f"variable id {v.id!r} already defined by the fragment")
        return BayesNet(health_variables + self.variables, tuple(health_cpts) + self.cpts)


def merge_fragments(*fragments: BnFragment, top: str | None = None) -> BnFragment:
    variables: list[Variable] = []
    cpts: list[Cpt] = []
    seen: set[str] = set()
    for frag in fragments:
        for v in frag.variables:
            if v.id in seen:
                raise MergeConflictError(f"variable id {v.id!r} defined by more than one fragment")
            seen.add(v.id)
            variables.append(v)
        cpts.extend(frag.cpts)
    return BnFragment(tuple(variables), tuple(cpts), top or fragments[-1].top)


def compile_to_bn(
    tree: FaultTree,
    bindings: Mapping[str, EventBinding] | None = None,
    health_variables: Iterable[Variable] = (),
) -> BnFragment:
    """Compile a tree into a fragment of deterministic indicator and gate CPTs.

    `health_variables` must declare every variable the bindings point at; the
    event indicator rows depend on the bound variable's full state list.
    """
    bindings = dict(bindings) if bindings is not None else dict(tree.bindings)
    health = {v.id: v for v in health_variables}

    variables: list[Variable] = []
    cpts: list[Cpt] = []

    for ev in tree.events:
        if ev not in bindings:
            raise UnboundEventError(f"basic event {ev!r} has no binding")
        b = bindings[ev]
        if b.variable not in health:
            raise UnboundEventError(
                f"basic event {ev!r} binds {b.variable!r}, which is not declared"
            )
        hv = health[b.variable]
        unknown = b.failed_states - set(hv.states)
        if unknown:
            raise UnboundEventError(
                f"basic event {ev!r}: failed states {sorted(unknown)} not in {b.variable!r}"
            )
        if b.failed_states >= set(hv.states):
            raise UnboundEventError(
                f"basic event {ev!r}: failed states must be a strict subset of "
                f"{b.variable!r} states"
            )
        table = {
            (s,): (0.0, 1.0) if s in b.failed_states else (1.0, 0.0) for s in hv.states
        }
        variables.append(Variable(ev, EVENT_STATES))
        cpts.append(Cpt(ev, (b.variable,), table))

    for g in tree.gates:
        table: dict[tuple[str, ...], tuple[float, ...]] = {}
        for combo in itertools.product(EVENT_STATES, repeat=len(g.inputs)):
            fired = g.fires([s == FAILED for s in combo])
            table[combo] = (0.0, 1.0) if fired else (1.0, 0.0)
        variables.append(Variable(g.id, EVENT_STATES))
        cpts.append(Cpt(g.id, g.inputs, table))

    return BnFragment(tuple(variables), tuple(cpts), tree.top)


def failure_probability(net: BayesNet, evidence: Mapping[str, str], top: str) -> float:
    """P(top = failed | evidence) through the compiled network."""
    posterior: Posterior = infer(net, evidence, top)
    return posterior[FAILED]
