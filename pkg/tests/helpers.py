"""Shared generators and independent oracles for the test suite.

The oracles here are deliberately plain-Python (dict walks, explicit sums)
so they share no code with the library paths they check.
"""

from __future__ import annotations

import itertools

import numpy as np

from riskdesk.decision import (
    ClassifierModel,
    DecisionModel,
    FailureModel,
    HealthStateSpace,
    TransitionModel,
    UtilityModel,
)
from riskdesk.fault_tree import FaultTree, Gate, EventBinding, compile_to_bn
from riskdesk.pgm import BayesNet, Cpt, Variable, enumerate_infer

BINARY = ("no", "yes")


def random_row(rng: np.random.Generator, k: int) -> tuple[float, ...]:
    v = rng.random(k) + 0.05
    v = v / v.sum()
    return tuple(float(x) for x in v)


def random_binary_net(rng: np.random.Generator, n_vars: int, max_parents: int = 3) -> BayesNet:
    names = [f"x{i:02d}" for i in range(n_vars)]
    variables = [Variable(n, BINARY) for n in names]
    cpts = []
    for i, name in enumerate(names):
        k = int(rng.integers(0, min(i, max_parents) + 1))
        parents = tuple(sorted(rng.choice(names[:i], size=k, replace=False))) if k else ()
        table = {
            combo: random_row(rng, 2)
            for combo in itertools.product(BINARY, repeat=len(parents))
        }
        cpts.append(Cpt(name, parents, table))
    return BayesNet(variables, cpts)


def joint_product_oracle(net: BayesNet, assignment: dict[str, str]) -> float:
    """Direct product of looked-up CPT entries, no library machinery."""
    p = 1.0
    for var_id, cpt in net.cpts.items():
        key = tuple(assignment[parent] for parent in cpt.parents)
        row = cpt.table[key]
        p *= row[net.variables[var_id].states.index(assignment[var_id])]
    return p


# --- fault trees -----------------------------------------------------------------


def random_fault_tree(
    rng: np.random.Generator, n_leaves: int
) -> tuple[FaultTree, list[Variable]]:
    """A random AND/OR/KOFN tree over binary health variables (one per leaf)."""
    events = [f"e{i}" for i in range(n_leaves)]
    health = [Variable(f"h{i}", ("good", "bad")) for i in range(n_leaves)]
    bindings = {
        e: EventBinding(h.id, frozenset({"bad"})) for e, h in zip(events, health)
    }
    gates: list[Gate] = []
    pool = list(events)
    gid = 0
    while len(pool) > 1:
        take = int(rng.integers(2, min(4, len(pool)) + 1))
        picked, pool = pool[:take], pool[take:]
        kind = str(rng.choice(["AND", "OR", "KOFN"]))
        k = int(rng.integers(1, len(picked) + 1)) if kind == "KOFN" else None
        name = f"g{gid}"
        gid += 1
        gates.append(Gate(name, kind, tuple(picked), k))
        pool.append(name)
    if not gates:  # single leaf: wrap it
        gates.append(Gate("g0", "OR", (events[0],), None))
        pool = ["g0"]
    tree = FaultTree("random", pool[0], tuple(events), tuple(gates), bindings)
    return tree, health


def boolean_top(tree: FaultTree, leaf_failed: dict[str, bool]) -> bool:
    return tree.evaluate(leaf_failed)[tree.top]


def compiled_net_for(tree: FaultTree, health: list[Variable], priors=None) -> BayesNet:
    fragment = compile_to_bn(tree, health_variables=health)
    if priors is None:
        priors = [Cpt(v.id, (), {(): (0.5, 0.5)}) for v in health]
    return fragment.to_net(health, priors)


# --- decision models -------------------------------------------------------------


def random_decision_model(
    rng: np.random.Generator,
    n_obs: int = 3,
    n_actions: int = 2,
    n_components: int = 2,
) -> DecisionModel:
    """A seeded random model over binary components with a random gate tree.
    Alternates generative and discriminative classifiers by coin flip."""
    comps = [Variable(f"c{i}", ("fine", "worn")) for i in range(n_components)]
    space = HealthStateSpace(tuple(comps))
    n = space.size

    events = [f"e{i}" for i in range(n_components)]
    bindings = {
        e: EventBinding(c.id, frozenset({"worn"})) for e, c in zip(events, comps)
    }
    kind = str(rng.choice(["AND", "OR", "KOFN"]))
    k = int(rng.integers(1, n_components + 1)) if kind == "KOFN" else None
    tree = FaultTree(
        "m", "top", tuple(events), (Gate("top", kind, tuple(events), k),), bindings
    )
    net = compiled_net_for(tree, comps)
    failure = FailureModel(net, "top", tuple(c.id for c in comps))

    observations = tuple(f"o{i}" for i in range(n_obs))
    if rng.random() < 0.5:
        likelihood = np.array([random_row(rng, n_obs) for _ in range(n)])
        prior = np.array(random_row(rng, n))
        classifier = ClassifierModel.generative(observations, likelihood, prior)
    else:
        table = np.array([random_row(rng, n) for _ in range(n_obs)])
        obs_prior = np.array(random_row(rng, n_obs))
        classifier = ClassifierModel.discriminative(observations, table, obs_prior)

    actions = tuple(f"a{i}" for i in range(n_actions))
    tables = {
        a: np.array([random_row(rng, n) for _ in range(n)]) for a in actions
    }
    transition = TransitionModel(actions, tables)

    failure_table = {
        s: float(rng.uniform(-50, 5)) for s in ("ok", "failed")
    }
    failure_next = {s: float(rng.uniform(-50, 5)) for s in ("ok", "failed")}
    action_table = {a: float(rng.uniform(-10, 0)) for a in actions}
    utilities = UtilityModel(failure_table, failure_next, action_table)
    return DecisionModel(space, classifier, transition, failure, utilities)


def weather_model() -> DecisionModel:
    """The stay-in-or-walk toy problem, folded into the one-slice process.

    A single weather variable (bad / good / indoors) is observed through an
    80%-accurate forecast; walking keeps the weather state, watching TV moves
    to "indoors". All utility sits on the forecast slice: bad -2, good 3,
    indoors 1, so EU(TV) = 1 and EU(walk | obs) prices the weather risk.
    """
    weather = Variable("weather", ("bad", "good", "indoors"))
    space = HealthStateSpace((weather,))
    classifier = ClassifierModel.generative(
        ("forecast_bad", "forecast_good"),
        np.array([[0.8, 0.2], [0.2, 0.8], [0.5, 0.5]]),
        np.array([0.4, 0.6, 0.0]),
    )
    transition = TransitionModel(
        ("TV", "walk"),
        {
            "TV": np.array([[0.0, 0.0, 1.0]] * 3),
            "walk": np.eye(3),
        },
    )
    outcome = Variable("outcome", ("bad", "good", "indoors"))
    net = BayesNet(
        [weather, outcome],
        [
            Cpt("weather", (), {(): (1 / 3, 1 / 3, 1 / 3)}),
            Cpt(
                "outcome",
                ("weather",),
                {("bad",): (1, 0, 0), ("good",): (0, 1, 0), ("indoors",): (0, 0, 1)},
            ),
        ],
    )
    failure = FailureModel(net, "outcome", ("weather",))
    utilities = UtilityModel(
        {"bad": 0.0, "good": 0.0, "indoors": 0.0},
        {"bad": -2.0, "good": 3.0, "indoors": 1.0},
        {"TV": 0.0, "walk": 0.0},
    )
    return DecisionModel(space, classifier, transition, failure, utilities)


# --- expected-utility oracles ------------------------------------------------------
#
# Plain-loop recomputation of the decision quantities. Failure expectations go
# through `enumerate_infer` on the compiled network, which is itself the
# independent oracle for variable elimination.


def oracle_posterior(model: DecisionModel, obs: str) -> list[float]:
    i = model.observations.index(obs)
    if model.classifier.form == "generative":
        raw = [
            model.classifier.health_prior[h] * model.classifier.likelihood[h, i]
            for h in range(model.space.size)
        ]
    else:
        raw = [model.classifier.posterior_table[i, h] for h in range(model.space.size)]
    total = sum(raw)
    return [r / total for r in raw]


def oracle_obs_marginal(model: DecisionModel) -> list[float]:
    if model.classifier.form == "generative":
        return [
            sum(
                model.classifier.health_prior[h] * model.classifier.likelihood[h, i]
                for h in range(model.space.size)
            )
            for i in range(len(model.observations))
        ]
    return [float(p) for p in model.classifier.obs_prior]


def oracle_failure_expectations(model: DecisionModel) -> tuple[list[float], list[float]]:
    fv = model.failure.failure_variable
    states = model.failure.failure_states
    u_now = [model.utilities.failure_now[s] for s in states]
    u_next = [model.utilities.failure_next[s] for s in states]
    e_now, e_next = [], []
    for joint in model.space.joint_states:
        ev = dict(zip(model.space.component_ids(), joint))
        post = enumerate_infer(model.failure.net, ev, fv)
        e_now.append(sum(p * u for p, u in zip(post.distribution, u_now)))
        e_next.append(sum(p * u for p, u in zip(post.distribution, u_next)))
    return e_now, e_next


def oracle_expected_utility(model: DecisionModel, obs: str, action: str) -> float:
    post = oracle_posterior(model, obs)
    e_now, e_next = oracle_failure_expectations(model)
    table = model.transition.tables[action]
    n = model.space.size
    value = model.utilities.action[action]
    value += sum(post[h] * e_now[h] for h in range(n))
    ahead = [
        sum(post[h] * float(table[h, h2]) for h in range(n)) for h2 in range(n)
    ]
    value += sum(ahead[h2] * e_next[h2] for h2 in range(n))
    return value


def oracle_best_strategy(model: DecisionModel) -> tuple[dict[str, str], float]:
    """Exhaustive enumeration over every policy: dom(obs) -> dom(actions)."""
    p_obs = oracle_obs_marginal(model)
    eu = {
        (obs, a): oracle_expected_utility(model, obs, a)
        for i, obs in enumerate(model.observations)
        if p_obs[i] > 0.0
        for a in model.actions
    }
    best_policy, best_value = None, -float("inf")
    for combo in itertools.product(model.actions, repeat=len(model.observations)):
        value = sum(
            p_obs[i] * eu[(obs, combo[i])]
            for i, obs in enumerate(model.observations)
            if p_obs[i] > 0.0
        )
        if value > best_value + 1e-12:
            best_policy, best_value = dict(zip(model.observations, combo)), value
    return best_policy, best_value
