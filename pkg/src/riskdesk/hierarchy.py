"""The S1-S6 system-of-systems tree for populations of structures.

Levels run from individual components (S1) up through substructures (S2) and
structures (S3) into the population levels: single-type inventories (S4),
group inventories (S5) and the total inventory (S6). The module validates
trees against the level rules, derives k-of-n population failure trees from
availability thresholds, and scores pairwise similarity with a Jaccard index
over descendant type tags, which gates whether model transfer between two
nodes is considered at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .fault_tree import EventBinding, FaultTree, Gate

LEVELS = ("S1", "S2", "S3", "S4", "S5", "S6")

KIND_LEVEL = {
    "component": "S1",
    "joint": "S1",
    "substructure": "S2",
    "structure": "S3",
    "type_inventory": "S4",
    "group_inventory": "S5",
    "inventory": "S6",
}

POPULATION_LEVELS = ("S4", "S5", "S6")


class HierarchyError(Exception):
    pass


class LevelMismatchError(HierarchyError):
    pass


@dataclass(frozen=True)
class HierarchyNode:
    id: str
    level: str
    kind: str
    type_tag: str | None = None
    children: tuple[str, ...] = ()
    health_variable: str | None = None
    merged_levels: bool = False  # S5 node also acting as the S4 level
    shared_environment: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if self.level not in LEVELS:
            raise HierarchyError(f"node {self.id!r}: unknown level {self.level!r}")
        if self.kind not in KIND_LEVEL:
            raise HierarchyError(f"node {self.id!r}: unknown kind {self.kind!r}")


class Hierarchy:
    """An immutable node container with a designated root."""

    def __init__(self, nodes: Iterable[HierarchyNode], root: str):
        self.nodes: dict[str, HierarchyNode] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise HierarchyError(f"duplicate node id {n.id!r}")
            self.nodes[n.id] = n
        if root not in self.nodes:
            raise HierarchyError(f"root {root!r} is not a declared node")
        self.root = root

    def node(self, node_id: str) -> HierarchyNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise HierarchyError(f"unknown node {node_id!r}") from None

    def children(self, node_id: str) -> list[HierarchyNode]:
        return [self.node(c) for c in self.node(node_id).children]

    def descendants(self, node_id: str) -> list[HierarchyNode]:
        out: list[HierarchyNode] = []
        stack = list(self.node(node_id).children)
        while stack:
            n = self.node(stack.pop(0))
            out.append(n)
            stack.extend(n.children)
        return out

    def structures_under(self, node_id: str) -> list[HierarchyNode]:
        node = self.node(node_id)
        pool = [node] if node.level == "S3" else self.descendants(node_id)
        return [n for n in pool if n.level == "S3"]

    def tag_set(self, node_id: str) -> frozenset[str]:
        nodes = [self.node(node_id)] + self.descendants(node_id)
        return frozenset(n.type_tag for n in nodes if n.type_tag)


@dataclass(frozen=True)
class Violation:
    node_id: str
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)


def validate_hierarchy(hierarchy: Hierarchy) -> ValidationReport:
    """Check every node against the level rules; violations are report entries,
    never exceptions."""
    out: list[Violation] = []
    seen_parent: dict[str, str] = {}

    for n in hierarchy.nodes.values():
        if KIND_LEVEL[n.kind] != n.level:
            out.append(
                Violation(n.id, "kind-level", f"kind {n.kind!r} belongs at {KIND_LEVEL[n.kind]}, "
                                              f"node is at {n.level}")
            )
        if n.health_variable is not None and n.level in POPULATION_LEVELS:
            out.append(
                Violation(n.id, "health-variable-level",
                          "health variables only attach to S1-S3 nodes")
            )
        if n.merged_levels and n.level != "S5":
            out.append(
                Violation(n.id, "merged-levels", "merged_levels is only meaningful on S5 nodes")
            )
        for c in n.children:
            if c not in hierarchy.nodes:
                out.append(Violation(n.id, "dangling-child", f"child {c!r} does not exist"))
                continue
            if c in seen_parent:
                out.append(
                    Violation(c, "multiple-parents",
                              f"node has parents {seen_parent[c]!r} and {n.id!r}")
                )
            seen_parent[c] = n.id
            child = hierarchy.nodes[c]
            expected = LEVELS[LEVELS.index(n.level) - 1] if n.level != "S1" else None
            if n.merged_levels and n.level == "S5":
                expected = "S3"
            if expected is None or child.level != expected:
                out.append(
                    Violation(n.id, "child-level",
                              f"child {c!r} at {child.level} under a {n.level} node")
                )

    # reachability / acyclicity from the root
    seen: set[str] = set()
    stack = [hierarchy.root]
    while stack:
        nid = stack.pop()
        if nid in seen:
            out.append(Violation(nid, "cycle", "node reachable through more than one path"))
            continue
        seen.add(nid)
        stack.extend(c for c in hierarchy.nodes[nid].children if c in hierarchy.nodes)
    for nid in hierarchy.nodes:
        if nid not in seen:
            out.append(Violation(nid, "unreachable", "node not reachable from the root"))

    # homogeneity: S4 nodes (and merged S5 nodes) hold a single structure type
    for n in hierarchy.nodes.values():
        if n.level == "S4" or (n.level == "S5" and n.merged_levels):
            tags = {s.type_tag for s in hierarchy.structures_under(n.id)}
            if len(tags) > 1:
                out.append(
                    Violation(n.id, "heterogeneous-type-inventory",
                              f"structure type tags {sorted(t or '?' for t in tags)} "
                              "must be identical in a type inventory")
                )

    return ValidationReport(tuple(out))


# --- population failure modes -------------------------------------------------


@dataclass(frozen=True)
class AvailabilityThreshold:
    fraction: float | str

    def as_fraction(self) -> Fraction:
        f = Fraction(str(self.fraction))
        if not (0 < f <= 1):
            raise HierarchyError(f"availability threshold must be in (0, 1], got {self.fraction}")
        return f


@dataclass(frozen=True)
class CustomCriterion:
    tree: FaultTree


@dataclass(frozen=True)
class PopulationFailureMode:
    id: str
    scope: str  # S4/S5/S6 node id
    criterion: AvailabilityThreshold | CustomCriterion
    description: str = ""


def availability_kofn_k(n: int, availability: float | str | Fraction) -> int:
    """Minimum number of failed members that pushes availability below the
    threshold. Exact rational arithmetic: float thresholds are taken at their
    decimal face value (0.99 means 99/100)."""
    if n < 1:
        raise HierarchyError("member count must be positive")
    a = availability if isinstance(availability, Fraction) else Fraction(str(availability))
    if not (0 < a <= 1):
        raise HierarchyError(f"availability threshold must be in (0, 1], got {availability}")
    return int(n * (1 - a)) + 1


def population_failure_tree(
    mode: PopulationFailureMode,
    members: Mapping[str, EventBinding],
) -> FaultTree:
    """Extend the fault-tree layer to the population: failure is k of n member
    top events, with k derived from the availability threshold."""
    if not members:
        raise HierarchyError(f"failure mode {mode.id!r}: empty member list")
    if isinstance(mode.criterion, CustomCriterion):
        return mode.criterion.tree
    k = availability_kofn_k(len(members), mode.criterion.as_fraction())
    event_ids = tuple(members)
    gate = Gate(mode.id, "KOFN", event_ids, k)
    return FaultTree(mode.id, mode.id, event_ids, (gate,), dict(members))


def kofn_failure_probability(member_probs: Sequence[float], k: int) -> float:
    """P(at least k of the members fail) for independent member failure
    probabilities, by the exact success-count recursion."""
    n = len(member_probs)
    if not (1 <= k <= n):
        raise HierarchyError(f"k must satisfy 1 <= k <= {n}, got {k}")
    counts = [1.0] + [0.0] * n  # counts[j] = P(exactly j failures so far)
    for p in member_probs:
        nxt = [0.0] * (n + 1)
        for j in range(n):
            nxt[j] += counts[j] * (1.0 - p)
            nxt[j + 1] += counts[j] * p
        counts = nxt
    return float(sum(counts[k:]))


# --- similarity ----------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityScore:
    pair: tuple[str, str]
    jaccard: float
    shared_tags: frozenset[str]


def similarity(hierarchy: Hierarchy, a: str, b: str) -> SimilarityScore:
    """Jaccard index over the two nodes' descendant type-tag sets."""
    na, nb = hierarchy.node(a), hierarchy.node(b)
    if na.level != nb.level:
        raise LevelMismatchError(f"{a!r} at {na.level} vs {b!r} at {nb.level}")
    if na.level not in ("S3", "S4"):
        raise LevelMismatchError(f"similarity is defined at S3/S4, not {na.level}")
    ta, tb = hierarchy.tag_set(a), hierarchy.tag_set(b)
    union = ta | tb
    shared = ta & tb
    jaccard = len(shared) / len(union) if union else 1.0
    return SimilarityScore((a, b), jaccard, shared)


def transfer_eligible(
    hierarchy: Hierarchy, a: str, b: str, threshold: float
) -> tuple[bool, SimilarityScore]:
    score = similarity(hierarchy, a, b)
    return score.jaccard >= threshold, score


# --- hierarchy file --------------------------------------------------------------
#
# JSON with nested nodes:
#   {"version": 1, "root": {"id": ..., "level": ..., "kind": ..., "type_tag": ...,
#                           "health_variable": ..., "merged_levels": ...,
#                           "shared_environment": ..., "children": [...]}}
# Optional fields may be omitted. See docs/formats.md.


def hierarchy_to_dict(hierarchy: Hierarchy) -> dict:
    def render(node_id: str) -> dict:
        n = hierarchy.node(node_id)
        doc: dict = {"id": n.id, "level": n.level, "kind": n.kind}
        if n.type_tag is not None:
            doc["type_tag"] = n.type_tag
        if n.health_variable is not None:
            doc["health_variable"] = n.health_variable
        if n.merged_levels:
            doc["merged_levels"] = True
        if n.shared_environment is not None:
            doc["shared_environment"] = n.shared_environment
        if n.children:
            doc["children"] = [render(c) for c in n.children]
        return doc

    return {"version": 1, "root": render(hierarchy.root)}


def hierarchy_from_dict(doc: Mapping) -> Hierarchy:
    nodes: list[HierarchyNode] = []

    def walk(entry: Mapping) -> str:
        children = [walk(c) for c in entry.get("children", [])]
        node = HierarchyNode(
            id=entry["id"],
            level=entry["level"],
            kind=entry["kind"],
            type_tag=entry.get("type_tag"),
            children=tuple(children),
            health_variable=entry.get("health_variable"),
            merged_levels=bool(entry.get("merged_levels", False)),
            shared_environment=entry.get("shared_environment"),
        )
        nodes.append(node)
        return node.id

    try:
        root = walk(doc["root"])
    except KeyError as exc:
        raise HierarchyError(f"malformed hierarchy document: missing {exc}") from exc
    return Hierarchy(nodes, root)


def save_hierarchy(hierarchy: Hierarchy, path: str | Path) -> None:
    Path(path).write_text(json.dumps(hierarchy_to_dict(hierarchy), indent=2) + "\n")


def load_hierarchy(path: str | Path) -> Hierarchy:
    return hierarchy_from_dict(json.loads(Path(path).read_text()))
