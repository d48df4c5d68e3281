"""Scenario files: the single configuration surface for demos, experiments
and the service.

A scenario is a JSON document describing one population: the structure layout
(components, substructures, fault-tree gates), the action set and repair
semantics, utilities, the optional shared environment, and one or more named
model families ("true" drives the simulator; "believed" drives the decision
engine; extra entries such as "believed_informed" support transfer studies).
Model tables can be given explicitly or through compact parametric forms.
The exact schema is documented in docs/formats.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .decision import (
    ClassifierModel,
    DecisionModel,
    FailureModel,
    HealthStateSpace,
    TransitionModel,
    UtilityModel,
)
from .fault_tree import FaultTree, compile_to_bn, parse_fault_tree
from .hierarchy import Hierarchy, HierarchyNode
from .pgm import Cpt, Variable
from .sim import (
    EnvironmentTruth,
    GroundTruth,
    P_ENV_INIT,
    P_GENERATE,
    StructureTruth,
    sample_index,
    stream,
)


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class ActionSpec:
    id: str
    cost: float
    repairs: tuple[str, ...] | str = ()  # component ids, or "all"


@dataclass(frozen=True)
class SubstructureSpec:
    id: str
    components: tuple[str, ...]


@dataclass(frozen=True)
class StructureSpec:
    component_states: tuple[str, ...]
    failed_states: tuple[str, ...]
    substructures: tuple[SubstructureSpec, ...]
    substructure_gate: str = "OR"
    top_gate: str = "OR"
    joint_components: tuple[str, ...] = ()
    initial_state: tuple[str, ...] | None = None
    fault_tree_text: str | None = None

    @property
    def components(self) -> tuple[str, ...]:
        return tuple(c for sub in self.substructures for c in sub.components)


@dataclass(frozen=True)
class EnvironmentSpec:
    enabled: bool = False
    states: tuple[str, ...] = ("calm", "storm")
    initial: tuple[float, ...] = (1.0, 0.0)
    transition: tuple[tuple[float, ...], ...] = ((1.0, 0.0), (0.0, 1.0))
    degrade_factors: tuple[float, ...] = (1.0, 1.0)


@dataclass(frozen=True)
class PopulationSpec:
    size: int
    type_tag: str
    prefix: str = "asset"
    group_id: str = "group"
    inventory_id: str = "inventory"
    merged_s4_s5: bool = False


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    horizon: int
    availability: str
    population: PopulationSpec
    structure: StructureSpec
    actions: tuple[ActionSpec, ...]
    failure_utility: dict[str, float]
    environment: EnvironmentSpec
    models: dict[str, dict]  # model name -> {"transition": spec, "classifier": spec}
    perturbation: float = 0.0
    health_prior: dict = field(default_factory=lambda: {"kind": "forecast", "steps": 5})
    initial_belief: str = "initial_state"  # or "prior"
    member_overrides: dict[str, dict] = field(default_factory=dict)
    voi: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def action_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.actions)

    def member_ids(self) -> list[str]:
        return [f"{self.population.prefix}_{i}" for i in range(self.population.size)]

    def model_spec(self, which: str) -> dict:
        try:
            return self.models[which]
        except KeyError:
            raise ScenarioError(f"scenario {self.name!r} has no model family {which!r}") from None


def _require(doc: Mapping, key: str, ctx: str):
    if key not in doc:
        raise ScenarioError(f"{ctx}: missing required field {key!r}")
    return doc[key]


def load_scenario(source: str | Path | Mapping) -> ScenarioConfig:
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = dict(source)

    name = _require(doc, "name", "scenario")
    pop_doc = _require(doc, "population", name)
    st_doc = _require(doc, "structure", name)

    subs = tuple(
        SubstructureSpec(s["id"], tuple(s["components"]))
        for s in _require(st_doc, "substructures", f"{name}.structure")
    )
    if not subs or any(not s.components for s in subs):
        raise ScenarioError(f"{name}: every substructure needs at least one component")
    structure = StructureSpec(
        component_states=tuple(_require(st_doc, "component_states", f"{name}.structure")),
        failed_states=tuple(_require(st_doc, "failed_states", f"{name}.structure")),
        substructures=subs,
        substructure_gate=st_doc.get("substructure_gate", "OR"),
        top_gate=st_doc.get("top_gate", "OR"),
        joint_components=tuple(st_doc.get("joint_components", ())),
        initial_state=tuple(st_doc["initial_state"]) if "initial_state" in st_doc else None,
        fault_tree_text=st_doc.get("fault_tree"),
    )
    comp_ids = structure.components
    if len(set(comp_ids)) != len(comp_ids):
        raise ScenarioError(f"{name}: duplicate component ids")
    bad = set(structure.failed_states) - set(structure.component_states)
    if bad or not structure.failed_states:
        raise ScenarioError(f"{name}: failed_states must be a nonempty subset of component_states")

    actions = tuple(
        ActionSpec(
            a["id"],
            float(a.get("cost", 0.0)),
            "all" if a.get("repairs") == "all" else tuple(a.get("repairs", ())),
        )
        for a in _require(doc, "actions", name)
    )
    if not actions:
        raise ScenarioError(f"{name}: at least one action required")
    for a in actions:
        if a.repairs != "all":
            unknown = set(a.repairs) - set(comp_ids)
            if unknown:
                raise ScenarioError(f"{name}: action {a.id!r} repairs unknown {sorted(unknown)}")

    env_doc = doc.get("environment", {})
    environment = EnvironmentSpec(
        enabled=bool(env_doc.get("enabled", False)),
        states=tuple(env_doc.get("states", ("calm", "storm"))),
        initial=tuple(env_doc.get("initial", (1.0, 0.0))),
        transition=tuple(tuple(row) for row in env_doc.get("transition", ((1.0, 0.0), (0.0, 1.0)))),
        degrade_factors=tuple(env_doc.get("degrade_factors", (1.0, 1.0))),
    )
    if environment.enabled:
        ne = len(environment.states)
        if not (len(environment.initial) == ne and len(environment.transition) == ne
                and len(environment.degrade_factors) == ne):
            raise ScenarioError(f"{name}: environment tables do not match its state count")

    models = _require(doc, "models", name)
    for which in ("true", "believed"):
        if which not in models:
            raise ScenarioError(f"{name}: models must define {which!r}")

    config = ScenarioConfig(
        name=name,
        seed=int(_require(doc, "seed", name)),
        horizon=int(_require(doc, "horizon", name)),
        availability=str(doc.get("availability_threshold", "0.99")),
        population=PopulationSpec(
            size=int(_require(pop_doc, "size", f"{name}.population")),
            type_tag=_require(pop_doc, "type_tag", f"{name}.population"),
            prefix=pop_doc.get("prefix", "asset"),
            group_id=pop_doc.get("group_id", "group"),
            inventory_id=pop_doc.get("inventory_id", "inventory"),
            merged_s4_s5=bool(pop_doc.get("merged_s4_s5", False)),
        ),
        structure=structure,
        actions=actions,
        failure_utility={k: float(v) for k, v in _require(doc, "utilities", name)["failure"].items()},
        environment=environment,
        models={k: dict(v) for k, v in models.items() if isinstance(v, Mapping)},
        perturbation=float(models.get("perturbation", 0.0)),
        health_prior=dict(doc.get("health_prior", {"kind": "forecast", "steps": 5})),
        initial_belief=doc.get("initial_belief", "initial_state"),
        member_overrides={k: dict(v) for k, v in doc.get("member_overrides", {}).items()},
        voi=dict(doc.get("voi", {})),
        raw=dict(doc),
    )
    if config.population.size < 1:
        raise ScenarioError(f"{name}: population size must be >= 1")
    if config.horizon < 0:
        raise ScenarioError(f"{name}: horizon must be >= 0")
    return config


# --- structure-level builders --------------------------------------------------


def component_variables(config: ScenarioConfig) -> tuple[Variable, ...]:
    states = config.structure.component_states
    return tuple(Variable(c, states) for c in config.structure.components)


def health_space(config: ScenarioConfig) -> HealthStateSpace:
    return HealthStateSpace(component_variables(config))


def fault_tree_for(config: ScenarioConfig) -> FaultTree:
    if config.structure.fault_tree_text:
        return parse_fault_tree(config.structure.fault_tree_text)
    failed = ", ".join(config.structure.failed_states)
    lines = [f"tree F_{config.name}"]
    for c in config.structure.components:
        lines.append(f"event e_{c} binds {c} failed {{{failed}}}")
    for sub in config.structure.substructures:
        args = ", ".join(f"e_{c}" for c in sub.components)
        lines.append(f"gate ft_{sub.id} = {config.structure.substructure_gate}({args})")
    top_args = ", ".join(f"ft_{sub.id}" for sub in config.structure.substructures)
    lines.append(f"gate F = {config.structure.top_gate}({top_args})")
    lines.append("top F")
    return parse_fault_tree("\n".join(lines) + "\n")


def failure_model(config: ScenarioConfig) -> FailureModel:
    tree = fault_tree_for(config)
    variables = component_variables(config)
    fragment = compile_to_bn(tree, health_variables=variables)
    # uniform placeholder priors: every query conditions on a full health state
    priors = [
        Cpt(v.id, (), {(): tuple(1.0 / v.card for _ in v.states)}) for v in variables
    ]
    net = fragment.to_net(variables, priors)
    return FailureModel(net, tree.top, tuple(v.id for v in variables))


def _tree_fail_mask(config: ScenarioConfig, space: HealthStateSpace) -> np.ndarray:
    tree = fault_tree_for(config)
    failed_states = {
        ev: tree.bindings[ev].failed_states for ev in tree.events
    }
    by_component = {tree.bindings[ev].variable: ev for ev in tree.events}
    comp_ids = space.component_ids()
    mask = np.zeros(space.size, dtype=bool)
    for i, joint in enumerate(space.joint_states):
        assignment = {}
        for cid, state in zip(comp_ids, joint):
            ev = by_component.get(cid)
            if ev is not None:
                assignment[ev] = state in failed_states[ev]
        for ev in tree.events:
            assignment.setdefault(ev, False)
        mask[i] = tree.evaluate(assignment)[tree.top]
    return mask


def _damage_counts(space: HealthStateSpace) -> np.ndarray:
    healthy = tuple(v.states[0] for v in space.components)
    return np.array(
        [sum(1 for s, h in zip(joint, healthy) if s != h) for joint in space.joint_states]
    )


def state_masks(config: ScenarioConfig) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Boolean masks over the joint health states: per component (bound failed
    states) and per gate (tree evaluation). Used to read failure probabilities
    straight off a belief vector."""
    space = health_space(config)
    tree = fault_tree_for(config)
    comp_ids = space.component_ids()
    failed = set(config.structure.failed_states)
    component_masks = {
        cid: np.array([joint[i] in failed for joint in space.joint_states])
        for i, cid in enumerate(comp_ids)
    }
    by_component = {tree.bindings[ev].variable: ev for ev in tree.events}
    gate_masks = {g.id: np.zeros(space.size, dtype=bool) for g in tree.gates}
    for idx, joint in enumerate(space.joint_states):
        assignment = {}
        for cid, state in zip(comp_ids, joint):
            ev = by_component.get(cid)
            if ev is not None:
                assignment[ev] = state in tree.bindings[ev].failed_states
        for ev in tree.events:
            assignment.setdefault(ev, False)
        values = tree.evaluate(assignment)
        for g in tree.gates:
            gate_masks[g.id][idx] = values[g.id]
    return component_masks, gate_masks


# --- model-table builders --------------------------------------------------------


def _component_chain(n_states: int, degrade_prob: float) -> np.ndarray:
    m = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        m[i, i] = 1.0 - degrade_prob
        m[i, i + 1] = degrade_prob
    m[n_states - 1, n_states - 1] = 1.0
    return m


def _component_factors(
    config: ScenarioConfig, degrade_prob: float, action: ActionSpec
) -> tuple[np.ndarray, ...]:
    n = len(config.structure.component_states)
    repaired = (
        set(config.structure.components) if action.repairs == "all" else set(action.repairs)
    )
    mats = []
    for c in config.structure.components:
        if c in repaired:
            m = np.zeros((n, n))
            m[:, 0] = 1.0
        else:
            m = _component_chain(n, degrade_prob)
        mats.append(m)
    return tuple(mats)


def _joint_transition(config: ScenarioConfig, degrade_prob: float, action: ActionSpec) -> np.ndarray:
    mats = _component_factors(config, degrade_prob, action)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def build_transition(config: ScenarioConfig, which: str) -> tuple[TransitionModel, bool]:
    """Returns the transition model and whether it is environment-conditioned."""
    spec = dict(config.model_spec(which).get("transition", {}))
    kind = spec.get("kind", "independent_degradation")
    action_ids = config.action_ids()
    env = config.environment
    env_coupled = bool(spec.get("env_coupled", False)) and env.enabled

    if kind == "independent_degradation":
        p = float(spec.get("degrade_prob", 0.0))
        if not (0.0 <= p <= 1.0):
            raise ScenarioError(f"{config.name}: degrade_prob must be in [0, 1]")
        representation = spec.get("representation", "auto")
        size = health_space(config).size
        factored = representation == "factored" or (
            representation == "auto" and size > 1024 and not env_coupled
        )
        if factored and env_coupled:
            raise ScenarioError(
                f"{config.name}: factored transitions cannot be environment-coupled"
            )
        tables: dict[str, np.ndarray | tuple[np.ndarray, ...]] = {}
        for a in config.actions:
            if factored:
                tables[a.id] = _component_factors(config, p, a)
            elif env_coupled:
                layers = [
                    _joint_transition(config, min(1.0, p * f), a)
                    for f in env.degrade_factors
                ]
                tables[a.id] = np.stack(layers)
            else:
                tables[a.id] = _joint_transition(config, p, a)
        return (
            TransitionModel(action_ids, tables, env.states if env_coupled else None),
            env_coupled,
        )

    if kind == "table":
        raw = _require(spec, "actions", f"{config.name}.models.{which}.transition")
        tables = {a: np.asarray(raw[a], dtype=float) for a in action_ids}
        return TransitionModel(action_ids, tables, None), False

    raise ScenarioError(f"{config.name}: unknown transition kind {kind!r}")


def count_observation_symbols(config: ScenarioConfig) -> tuple[str, ...]:
    return tuple(f"d{i}" for i in range(len(config.structure.components) + 1))


def _count_confusion(counts: np.ndarray, n_obs: int, accuracy: float) -> np.ndarray:
    rows = np.zeros((len(counts), n_obs))
    for i, k in enumerate(counts):
        if accuracy >= 1.0 or n_obs == 1:
            rows[i, k] = 1.0
            continue
        weights = np.array([0.0 if j == k else 0.5 ** abs(j - k) for j in range(n_obs)])
        rows[i] = (1.0 - accuracy) * weights / weights.sum()
        rows[i, k] = accuracy
    return rows


def health_prior_vector(config: ScenarioConfig, which: str = "believed") -> np.ndarray:
    space = health_space(config)
    spec = config.health_prior
    kind = spec.get("kind", "forecast")
    init = initial_state_index(config)
    if kind == "point":
        prior = np.zeros(space.size)
        prior[init] = 1.0
        return prior
    if kind == "uniform":
        return np.full(space.size, 1.0 / space.size)
    if kind == "forecast":
        from .decision import apply_factored

        steps = int(spec.get("steps", 5))
        transition, env_coupled = build_transition(config, which)
        table = transition.tables[config.actions[0].id]
        if env_coupled:
            table = np.tensordot(env_stationary(config), table, axes=1)
        prior = np.zeros(space.size)
        prior[init] = 1.0
        for _ in range(steps):
            prior = apply_factored(prior, table) if isinstance(table, tuple) else prior @ table
        return prior
    raise ScenarioError(f"{config.name}: unknown health prior kind {kind!r}")


def build_classifier(config: ScenarioConfig, which: str) -> ClassifierModel:
    spec = dict(config.model_spec(which).get("classifier", {}))
    kind = spec.get("kind", "noisy_count")
    space = health_space(config)

    if kind == "table":
        form = spec.get("form", "generative")
        observations = tuple(_require(spec, "observations", f"{config.name}.classifier"))
        if form == "generative":
            return ClassifierModel.generative(
                observations,
                np.asarray(spec["likelihood"], dtype=float),
                health_prior_vector(config, "believed"),
            )
        return ClassifierModel.discriminative(
            observations,
            np.asarray(spec["posterior"], dtype=float),
            np.asarray(spec["obs_prior"], dtype=float),
        )

    prior = health_prior_vector(config, "believed")
    if kind == "noisy_count":
        observations = count_observation_symbols(config)
        accuracy = float(spec.get("accuracy", 1.0))
        likelihood = _count_confusion(_damage_counts(space), len(observations), accuracy)
        return ClassifierModel.generative(observations, likelihood, prior)
    if kind == "uniform":
        observations = count_observation_symbols(config)
        likelihood = np.full((space.size, len(observations)), 1.0 / len(observations))
        return ClassifierModel.generative(observations, likelihood, prior)
    if kind == "identity":
        observations = tuple(space.labels)
        accuracy = float(spec.get("accuracy", 1.0))
        n = space.size
        likelihood = np.full((n, n), (1.0 - accuracy) / (n - 1)) if n > 1 else np.ones((1, 1))
        np.fill_diagonal(likelihood, accuracy)
        return ClassifierModel.generative(observations, likelihood, prior)
    raise ScenarioError(f"{config.name}: unknown classifier kind {kind!r}")


def utilities_for(config: ScenarioConfig, member: str | None = None) -> UtilityModel:
    failure = dict(config.failure_utility)
    action = {a.id: a.cost for a in config.actions}
    override = config.member_overrides.get(member or "", {})
    failure.update(override.get("utilities", {}).get("failure", {}))
    for aid, cost in override.get("utilities", {}).get("action", {}).items():
        action[aid] = float(cost)
    return UtilityModel.simple({k: float(v) for k, v in failure.items()}, action)


def env_stationary(config: ScenarioConfig) -> np.ndarray:
    env = config.environment
    p = np.asarray(env.transition, dtype=float)
    n = p.shape[0]
    a = np.vstack([p.T - np.eye(n), np.ones(n)])
    b = np.concatenate([np.zeros(n), [1.0]])
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def initial_state_index(config: ScenarioConfig) -> int:
    space = health_space(config)
    if config.structure.initial_state is not None:
        return space.index_of(config.structure.initial_state)
    return space.index_of(tuple(v.states[0] for v in space.components))


def build_decision_model(
    config: ScenarioConfig, which: str = "believed", member: str | None = None
) -> DecisionModel:
    transition, env_coupled = build_transition(config, which)
    return DecisionModel(
        space=health_space(config),
        classifier=build_classifier(config, which),
        transition=transition,
        failure=failure_model(config),
        utilities=utilities_for(config, member),
        env_prior=env_stationary(config) if env_coupled else None,
    )


# --- population assembly -----------------------------------------------------------


def build_hierarchy(config: ScenarioConfig) -> Hierarchy:
    nodes: list[HierarchyNode] = []
    structure_ids = []
    env_var = "environment" if config.environment.enabled else None
    for member in config.member_ids():
        comp_nodes = []
        sub_ids = []
        for sub in config.structure.substructures:
            comp_ids = []
            for c in sub.components:
                cid = f"{member}.{c}"
                kind = "joint" if c in config.structure.joint_components else "component"
                nodes.append(
                    HierarchyNode(cid, "S1", kind, type_tag=c, health_variable=c)
                )
                comp_ids.append(cid)
            sid = f"{member}.{sub.id}"
            nodes.append(
                HierarchyNode(sid, "S2", "substructure", type_tag=sub.id,
                              children=tuple(comp_ids))
            )
            sub_ids.append(sid)
        nodes.append(
            HierarchyNode(member, "S3", "structure", type_tag=config.population.type_tag,
                          children=tuple(sub_ids))
        )
        structure_ids.append(member)

    pop = config.population
    if pop.merged_s4_s5:
        nodes.append(
            HierarchyNode(pop.group_id, "S5", "group_inventory",
                          children=tuple(structure_ids), merged_levels=True,
                          shared_environment=env_var)
        )
    else:
        type_inv = f"{pop.type_tag}_inventory"
        nodes.append(
            HierarchyNode(type_inv, "S4", "type_inventory", type_tag=pop.type_tag,
                          children=tuple(structure_ids), shared_environment=env_var)
        )
        nodes.append(
            HierarchyNode(pop.group_id, "S5", "group_inventory", children=(type_inv,))
        )
    nodes.append(
        HierarchyNode(pop.inventory_id, "S6", "inventory", children=(pop.group_id,))
    )
    return Hierarchy(nodes, pop.inventory_id)


def _mix_with_uniform(table: np.ndarray, rate: float) -> np.ndarray:
    if rate <= 0.0:
        return table
    uniform = np.full_like(table, 1.0 / table.shape[-1])
    return (1.0 - rate) * table + rate * uniform


def generate_population(
    config: ScenarioConfig | Mapping | str | Path, seed: int | None = None
) -> tuple[Hierarchy, GroundTruth]:
    if not isinstance(config, ScenarioConfig):
        config = load_scenario(config)
    master_seed = config.seed if seed is None else int(seed)

    hierarchy = build_hierarchy(config)
    space = health_space(config)
    mask = _tree_fail_mask(config, space)
    transition, _ = build_transition(config, "true")
    confusion_model = build_classifier(config, "true")
    if confusion_model.form != "generative":
        raise ScenarioError("the true classifier must be generative (it is sampled from)")
    init = initial_state_index(config)

    for a in transition.actions:
        if isinstance(transition.tables[a], tuple):
            raise ScenarioError(
                f"{config.name}: the true transition must be dense (the simulator "
                "samples joint rows); use representation 'dense'"
            )

    structures: list[StructureTruth] = []
    for idx, member in enumerate(config.member_ids()):
        rate = config.perturbation * stream(master_seed, P_GENERATE, idx, 0).random()
        tables = {
            a: _mix_with_uniform(transition.tables[a], rate) for a in transition.actions
        }
        confusion = _mix_with_uniform(confusion_model.likelihood, rate)
        utilities = utilities_for(config, member)
        failure_utility = np.array(
            [utilities.failure_now["failed" if m else "ok"] for m in mask]
        )
        structures.append(
            StructureTruth(
                id=member,
                labels=tuple(space.labels),
                observations=confusion_model.observations,
                transition=tables,
                confusion=confusion,
                fail_mask=mask.copy(),
                failure_utility=failure_utility,
                action_cost={a.id: utilities.action[a.id] for a in config.actions},
            )
        )

    env = None
    env_state = None
    if config.environment.enabled:
        env = EnvironmentTruth(
            states=config.environment.states,
            initial=np.asarray(config.environment.initial, dtype=float),
            transition=np.asarray(config.environment.transition, dtype=float),
        )
        env_state = sample_index(env.initial, stream(master_seed, P_ENV_INIT, 0, 0).random())

    truth = GroundTruth(
        master_seed=master_seed,
        structures=structures,
        env=env,
        states=[init] * len(structures),
        env_state=env_state,
    )
    return hierarchy, truth


@dataclass
class Population:
    """A loaded scenario: hierarchy, ground truth, and believed models."""

    name: str
    config: ScenarioConfig
    hierarchy: Hierarchy
    truth: GroundTruth
    believed: dict[str, DecisionModel]
    availability: str
    horizon: int
    master_seed: int

    def initial_belief(self, structure_id: str) -> np.ndarray:
        model = self.believed[structure_id]
        if self.config.initial_belief == "prior":
            return model.classifier.prior()
        belief = np.zeros(model.space.size)
        belief[initial_state_index(self.config)] = 1.0
        return belief


def build_population(
    config: ScenarioConfig | Mapping | str | Path, seed: int | None = None
) -> Population:
    if not isinstance(config, ScenarioConfig):
        config = load_scenario(config)
    hierarchy, truth = generate_population(config, seed)

    base = build_decision_model(config, "believed")
    believed: dict[str, DecisionModel] = {}
    for member in config.member_ids():
        if member in config.member_overrides:
            believed[member] = build_decision_model(config, "believed", member)
            believed[member].failure = base.failure  # share the compiled cache
        else:
            believed[member] = base

    return Population(
        name=config.name,
        config=config,
        hierarchy=hierarchy,
        truth=truth,
        believed=believed,
        availability=config.availability,
        horizon=config.horizon,
        master_seed=truth.master_seed,
    )
