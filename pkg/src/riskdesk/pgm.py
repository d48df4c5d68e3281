"""Discrete Bayesian networks: representation and exact inference.

The model is deliberately small. A variable is a name plus an ordered list of
state labels; every variable owns one conditional probability table (CPT)
keyed by parent-state combinations, and the edge set of the network is implied
by the CPT parent lists. Inference is exact: `infer` runs variable elimination
under a min-fill ordering with lexicographic tie-breaking, and
`enumerate_infer` answers the same queries by brute-force enumeration of the
joint. The enumeration route exists so the two can be checked against each
other; it must never share code with the elimination route.

Networks are immutable after construction and every query function is pure,
so concurrent read-only use is safe.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SUM_TOL = 1e-9
ENUMERATION_CAP = 2 ** 20


class PgmError(Exception):
    """Base class for all errors raised by this module."""


class NetworkValidationError(PgmError):
    """The network (or one of its parts) violates a structural invariant."""


class EvidenceError(PgmError):
    """Evidence names an unknown variable or an unknown state label."""


class IncompleteAssignmentError(PgmError):
    """A full joint assignment is required but some variable is missing."""


class QueryIsEvidenceError(PgmError):
    """The query variable is itself observed."""


class InconsistentEvidenceError(PgmError):
    """The evidence has probability zero under the network."""


class StateSpaceTooLargeError(PgmError):
    """The joint state space exceeds the enumeration cap."""


@dataclass(frozen=True)
class Variable:
    """A discrete random variable with a fixed, canonical state order."""

    id: str
    states: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) < 2:
            raise NetworkValidationError(
                f"variable {self.id!r} needs at least 2 states, got {len(self.states)}"
            )
        if len(set(self.states)) != len(self.states):
            raise NetworkValidationError(f"variable {self.id!r} has duplicate state labels")

    @property
    def card(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise EvidenceError(f"variable {self.id!r} has no state {state!r}") from None


@dataclass(frozen=True)
class Cpt:
    """P(child | parents) as a table: parent-state combination -> probability row.

    Rows failing the sum-to-1 check are rejected outright; silent
    renormalisation would hide data errors.
    """

    child: str
    parents: tuple[str, ...]
    table: Mapping[tuple[str, ...], tuple[float, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        clean: dict[tuple[str, ...], tuple[float, ...]] = {}
        for key, row in self.table.items():
            key = tuple(key)
            if len(key) != len(self.parents):
                raise NetworkValidationError(
                    f"cpt for {self.child!r}: row key {key} does not match parents {self.parents}"
                )
            row = tuple(float(p) for p in row)
            if any(p < 0.0 for p in row):
                raise NetworkValidationError(
                    f"cpt for {self.child!r}: negative probability in row {key}"
                )
            if abs(sum(row) - 1.0) > SUM_TOL:
                raise NetworkValidationError(
                    f"cpt for {self.child!r}: row {key} sums to {sum(row)!r}, not 1"
                )
            clean[key] = row
        object.__setattr__(self, "table", clean)

    def row(self, parent_states: tuple[str, ...]) -> tuple[float, ...]:
        return self.table[parent_states]


class BayesNet:
    """An immutable discrete Bayesian network: variables plus one CPT each."""

    def __init__(self, variables: Iterable[Variable], cpts: Iterable[Cpt]):
        self.variables: dict[str, Variable] = {}
        for v in variables:
            if v.id in self.variables:
                raise NetworkValidationError(f"duplicate variable id {v.id!r}")
            self.variables[v.id] = v

        self.cpts: dict[str, Cpt] = {}
        for c in cpts:
            if c.child not in self.variables:
                raise NetworkValidationError(f"cpt child {c.child!r} is not a declared variable")
            if c.child in self.cpts:
                raise NetworkValidationError(f"more than one cpt for variable {c.child!r}")
            self.cpts[c.child] = c

        missing = set(self.variables) - set(self.cpts)
        if missing:
            raise NetworkValidationError(f"variables without a cpt: {sorted(missing)}")

        self._validate_tables()
        self.order = self._topological_order()
        self._arrays: dict[str, np.ndarray] = {}
        self._orders: dict[tuple[frozenset[str], str], list[str]] = {}

    def _validate_tables(self) -> None:
        for c in self.cpts.values():
            for p in c.parents:
                if p not in self.variables:
                    raise NetworkValidationError(
                        f"cpt for {c.child!r} names unknown parent {p!r}"
                    )
            child = self.variables[c.child]
            expected = 1
            for p in c.parents:
                expected *= self.variables[p].card
            if len(c.table) != expected:
                raise NetworkValidationError(
                    f"cpt for {c.child!r} has {len(c.table)} rows, expected {expected}"
                )
            for key, row in c.table.items():
                for p, s in zip(c.parents, key):
                    if s not in self.variables[p].states:
                        raise NetworkValidationError(
                            f"cpt for {c.child!r}: {s!r} is not a state of parent {p!r}"
                        )
                if len(row) != child.card:
                    raise NetworkValidationError(
                        f"cpt for {c.child!r}: row {key} has {len(row)} entries, "
                        f"expected {child.card}"
                    )

    def _topological_order(self) -> tuple[str, ...]:
        indegree = {v: len(self.cpts[v].parents) for v in self.variables}
        children: dict[str, list[str]] = {v: [] for v in self.variables}
        for c in self.cpts.values():
            for p in c.parents:
                children[p].append(c.child)
        ready = sorted(v for v, d in indegree.items() if d == 0)
        order: list[str] = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for ch in children[v]:
                indegree[ch] -= 1
                if indegree[ch] == 0:
                    ready.append(ch)
            ready.sort()
        if len(order) != len(self.variables):
            cyclic = sorted(set(self.variables) - set(order))
            raise NetworkValidationError(f"network has a directed cycle through {cyclic}")
        return tuple(order)

    def var(self, var_id: str) -> Variable:
        try:
            return self.variables[var_id]
        except KeyError:
            raise EvidenceError(f"unknown variable {var_id!r}") from None

    def cpt_array(self, child: str) -> np.ndarray:
        """CPT as an ndarray with axes (parent_1, ..., parent_k, child).

        Built once per variable and cached; the network is immutable."""
        cached = self._arrays.get(child)
        if cached is not None:
            return cached
        c = self.cpts[child]
        shape = tuple(self.variables[p].card for p in c.parents) + (self.variables[child].card,)
        arr = np.empty(shape, dtype=float)
        parent_states = [self.variables[p].states for p in c.parents]
        for key in itertools.product(*parent_states):
            idx = tuple(self.variables[p].index(s) for p, s in zip(c.parents, key))
            arr[idx] = c.table[key]
        arr.setflags(write=False)
        self._arrays[child] = arr
        return arr


@dataclass(frozen=True)
class Posterior:
    """An exact posterior distribution over one variable's states."""

    variable: str
    states: tuple[str, ...]
    distribution: tuple[float, ...]

    def __getitem__(self, state: str) -> float:
        return self.distribution[self.states.index(state)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.states, self.distribution))


def validate_evidence(net: BayesNet, evidence: Mapping[str, str]) -> None:
    for var_id, state in evidence.items():
        net.var(var_id).index(state)


def joint_probability(net: BayesNet, assignment: Mapping[str, str]) -> float:
    """Probability of one full joint assignment, straight off the CPT factorisation."""
    missing = [v for v in net.variables if v not in assignment]
    if missing:
        raise IncompleteAssignmentError(f"assignment missing variables: {sorted(missing)}")
    validate_evidence(net, {v: s for v, s in assignment.items() if v in net.variables})
    p = 1.0
    for var_id in net.order:
        c = net.cpts[var_id]
        key = tuple(assignment[par] for par in c.parents)
        row = c.row(key)
        p *= row[net.variables[var_id].index(assignment[var_id])]
        if p == 0.0:
            return 0.0
    return p


# --- variable elimination -------------------------------------------------


class _Factor:
    __slots__ = ("vars", "values")

    def __init__(self, variables: tuple[str, ...], values: np.ndarray):
        self.vars = variables
        self.values = values


def _align(factor: _Factor, out_vars: tuple[str, ...]) -> np.ndarray:
    """Permute/reshape factor values to broadcast against the out_vars axes."""
    own = factor.vars
    perm = sorted(range(len(own)), key=lambda i: out_vars.index(own[i]))
    arr = factor.values
    if perm != list(range(len(own))):
        arr = arr.transpose(perm)
    if len(own) != len(out_vars):
        it = iter(sorted(out_vars.index(v) for v in own))
        shape = [1] * len(out_vars)
        for axis, size in zip(it, arr.shape):
            shape[axis] = size
        arr = arr.reshape(shape)
    return arr


def _multiply(a: _Factor, b: _Factor) -> _Factor:
    if not b.vars:
        return _Factor(a.vars, a.values * b.values)
    if not a.vars:
        return _Factor(b.vars, b.values * a.values)
    out_vars = a.vars + tuple(v for v in b.vars if v not in a.vars)
    return _Factor(out_vars, _align(a, out_vars) * _align(b, out_vars))


def _sum_out(factor: _Factor, var: str) -> _Factor:
    axis = factor.vars.index(var)
    remaining = factor.vars[:axis] + factor.vars[axis + 1 :]
    return _Factor(remaining, factor.values.sum(axis=axis))


def _restrict(factor: _Factor, var: str, state_idx: int) -> _Factor:
    axis = factor.vars.index(var)
    remaining = factor.vars[:axis] + factor.vars[axis + 1 :]
    index: list = [slice(None)] * factor.values.ndim
    index[axis] = state_idx
    return _Factor(remaining, factor.values[tuple(index)])


def _min_fill_order(scopes: Sequence[tuple[str, ...]], to_eliminate: set[str]) -> list[str]:
    """Min-fill elimination order; ties broken by lexicographic variable id."""
    neighbours: dict[str, set[str]] = {}
    for scope in scopes:
        for v in scope:
            neighbours.setdefault(v, set()).update(u for u in scope if u != v)
    for v in to_eliminate:
        neighbours.setdefault(v, set())

    order: list[str] = []
    remaining = set(to_eliminate)
    while remaining:

        def fill_cost(v: str) -> int:
            nbrs = [u for u in neighbours[v] if u in neighbours]
            cost = 0
            for i, u in enumerate(nbrs):
                for w in nbrs[i + 1 :]:
                    if w not in neighbours[u]:
                        cost += 1
            return cost

        best = min(remaining, key=lambda v: (fill_cost(v), v))
        order.append(best)
        remaining.discard(best)
        nbrs = [u for u in neighbours[best] if u in neighbours]
        for i, u in enumerate(nbrs):
            for w in nbrs[i + 1 :]:
                neighbours[u].add(w)
                neighbours[w].add(u)
        for u in nbrs:
            neighbours[u].discard(best)
        del neighbours[best]
    return order


def infer(net: BayesNet, evidence: Mapping[str, str], query: str) -> Posterior:
    """Exact posterior P(query | evidence) by variable elimination."""
    qvar = net.var(query)
    validate_evidence(net, evidence)
    if query in evidence:
        raise QueryIsEvidenceError(f"query variable {query!r} is observed")

    factors: list[_Factor] = []
    for var_id in net.order:
        c = net.cpts[var_id]
        f = _Factor(c.parents + (var_id,), net.cpt_array(var_id))
        for ev_var in c.parents + (var_id,):
            if ev_var in evidence:
                f = _restrict(f, ev_var, net.variables[ev_var].index(evidence[ev_var]))
        factors.append(f)

    # the min-fill order depends only on which variables are observed
    order_key = (frozenset(evidence), query)
    order = net._orders.get(order_key)
    if order is None:
        hidden = set(net.variables) - set(evidence) - {query}
        order = _min_fill_order([f.vars for f in factors], hidden)
        net._orders[order_key] = order

    for var in order:
        related = [f for f in factors if var in f.vars]
        if not related:
            continue
        product = related[0]
        for f in related[1:]:
            product = _multiply(product, f)
        factors = [f for f in factors if var not in f.vars]
        factors.append(_sum_out(product, var))

    result = _Factor((), np.array(1.0))
    for f in factors:
        result = _multiply(result, f)
    if result.vars != (query,):
        result = _Factor((query,), np.broadcast_to(result.values, (qvar.card,)).copy())

    total = float(result.values.sum())
    if total == 0.0:
        raise InconsistentEvidenceError("evidence has probability zero under the network")
    probs = result.values / total
    return Posterior(query, qvar.states, tuple(float(p) for p in probs))


def enumerate_infer(
    net: BayesNet,
    evidence: Mapping[str, str],
    query: str,
    cap: int = ENUMERATION_CAP,
) -> Posterior:
    """Exact posterior by full joint enumeration. The independent oracle for `infer`.

    Deliberately shares no factor machinery with `infer`: probabilities come
    from direct CPT lookups multiplied along a topological order.
    """
    qvar = net.var(query)
    validate_evidence(net, evidence)
    if query in evidence:
        raise QueryIsEvidenceError(f"query variable {query!r} is observed")

    size = 1
    for v in net.variables.values():
        size *= v.card
    if size > cap:
        raise StateSpaceTooLargeError(f"joint state space {size} exceeds cap {cap}")

    free = [v for v in net.order if v not in evidence]
    free_states = [net.variables[v].states for v in free]
    cpts = [(v, net.cpts[v]) for v in net.order]

    acc = {s: 0.0 for s in qvar.states}
    assignment: dict[str, str] = dict(evidence)
    for combo in itertools.product(*free_states):
        for v, s in zip(free, combo):
            assignment[v] = s
        p = 1.0
        for var_id, c in cpts:
            key = tuple(assignment[par] for par in c.parents)
            p *= c.row(key)[net.variables[var_id].index(assignment[var_id])]
            if p == 0.0:
                break
        if p != 0.0:
            acc[assignment[query]] += p

    total = sum(acc.values())
    if total == 0.0:
        raise InconsistentEvidenceError("evidence has probability zero under the network")
    return Posterior(query, qvar.states, tuple(acc[s] / total for s in qvar.states))


# --- interchange format -----------------------------------------------------
#
# A network file is a single JSON document:
#   {"variables": [{"id": ..., "states": [...]}, ...],
#    "cpts": [{"child": ..., "parents": [...],
#              "table": [{"given": [...], "p": [...]}, ...]}, ...]}
# Rows are listed in lexicographic product order of the parent state lists.
# See docs/formats.md; the schema is stable.


def network_to_dict(net: BayesNet) -> dict:
    variables = [{"id": v.id, "states": list(v.states)} for v in net.variables.values()]
    cpts = []
    for var_id in net.variables:
        c = net.cpts[var_id]
        parent_states = [net.variables[p].states for p in c.parents]
        rows = [
            {"given": list(key), "p": list(c.table[key])}
            for key in itertools.product(*parent_states)
        ]
        cpts.append({"child": c.child, "parents": list(c.parents), "table": rows})
    return {"variables": variables, "cpts": cpts}


def network_from_dict(doc: Mapping) -> BayesNet:
    try:
        variables = [Variable(v["id"], tuple(v["states"])) for v in doc["variables"]]
        cpts = [
            Cpt(
                c["child"],
                tuple(c["parents"]),
                {tuple(row["given"]): tuple(row["p"]) for row in c["table"]},
            )
            for c in doc["cpts"]
        ]
    except (KeyError, TypeError) as exc:
        raise NetworkValidationError(f"malformed network document: {exc}") from exc
    return BayesNet(variables, cpts)


def save_network(net: BayesNet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n")


def load_network(path: str | Path) -> BayesNet:
    return network_from_dict(json.loads(Path(path).read_text()))
