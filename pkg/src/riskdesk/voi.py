"""Value of information: observation purchase, model transfer, and
run-to-failure data harvesting.

Observation VoI is exact preposterior analysis on the decision model. The
transfer quantities have no closed form here, so they are estimated as
realized-utility deltas against the simulator under paired common-random-
number seeds: trial i of the baseline and the informed run share one world
seed, which makes the identical-models case exactly zero and slashes the
variance everywhere else.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .decision import (
    ClassifierModel,
    DecisionModel,
    TransitionModel,
    best_prior_action,
    forecast,
    rolling_horizon,
    solve_policy,
    solve_with_belief,
)
from .hierarchy import Hierarchy, SimilarityScore, transfer_eligible
from .pgm import Cpt
from .scenario import (
    Population,
    ScenarioConfig,
    build_population,
    generate_population,
    initial_state_index,
    load_scenario,
)
from .sim import TruthFeed, initial_observations, step


class VoiError(Exception):
    pass


class DomainMismatchError(VoiError):
    pass


class ShapeMismatchError(VoiError):
    pass


class EligibilityError(VoiError):
    pass


@dataclass(frozen=True)
class VoiReport:
    kind: str  # observation | transfer | failure_data
    value: float
    baseline: float
    informed: float
    n: int | None = None
    stderr: float | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "baseline": self.baseline,
            "informed": self.informed,
            "n": self.n,
            "stderr": self.stderr,
            "seed": self.seed,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class TransferProposal:
    source: str
    target: str
    payload: str  # transition | classifier
    scope: str
    mechanism: str  # pool | copy
    eligibility: SimilarityScore


def propose_transfer(
    hierarchy: Hierarchy,
    source: str,
    target: str,
    payload: str,
    mechanism: str,
    threshold: float,
    scope: str = "structure",
) -> TransferProposal:
    """Gate a transfer on tag-set similarity before any payload moves."""
    if payload not in ("transition", "classifier"):
        raise VoiError(f"unknown transfer payload {payload!r}")
    if mechanism not in ("pool", "copy"):
        raise VoiError(f"unknown transfer mechanism {mechanism!r}")
    ok, score = transfer_eligible(hierarchy, source, target, threshold)
    if not ok:
        raise EligibilityError(
            f"{source!r} -> {target!r}: similarity {score.jaccard:.3f} below {threshold}"
        )
    return TransferProposal(source, target, payload, scope, mechanism, score)


def apply_transfer(
    proposal: TransferProposal,
    source: DecisionModel,
    target: DecisionModel,
    weights: Sequence[float] = (1.0, 1.0),
) -> DecisionModel:
    """Materialise a gated proposal: copy replaces the target's payload with
    the source's; pool blends them row-wise with the given (target, source)
    weights. Returns the informed target model."""
    from dataclasses import replace as _replace

    _check_domains(source, target)
    if proposal.payload == "classifier":
        if proposal.mechanism == "copy":
            return _replace(target, classifier=source.classifier)
        if source.classifier.form != "generative" or target.classifier.form != "generative":
            raise VoiError("pooling classifiers requires the generative form on both sides")
        pooled = pool_rows(
            [target.classifier.likelihood, source.classifier.likelihood], list(weights)
        )
        return _replace(
            target,
            classifier=ClassifierModel.generative(
                target.observations, pooled, target.classifier.health_prior
            ),
        )

    if source.transition.env_states != target.transition.env_states:
        raise DomainMismatchError("transition environment conditioning differs")
    tables: dict[str, np.ndarray] = {}
    for action in target.actions:
        src = source.transition.tables[action]
        dst = target.transition.tables[action]
        if proposal.mechanism == "copy":
            tables[action] = src
        else:
            if not isinstance(src, np.ndarray) or not isinstance(dst, np.ndarray):
                raise VoiError("pooling needs dense transition tables on both sides")
            if src.shape != dst.shape:
                raise ShapeMismatchError("transition tables differ in shape")
            tables[action] = pool_rows([dst, src], list(weights))
    return target.with_transition(
        TransitionModel(target.actions, tables, target.transition.env_states)
    )


# --- observation VoI (exact) ---------------------------------------------------


def voi_observation(model: DecisionModel) -> VoiReport:
    """Exact value of seeing the observation before acting:
    sum_obs P(obs) max_d EU(d|obs)  minus  max_d sum_obs P(obs) EU(d|obs)."""
    _, informed = solve_policy(model)
    _, baseline = best_prior_action(model)
    return VoiReport("observation", informed - baseline, baseline, informed)


# --- CPT pooling -----------------------------------------------------------------


def pool_rows(tables: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Row-wise convex combination of stochastic tables, rows renormalised."""
    if len(tables) != len(weights) or not tables:
        raise ShapeMismatchError("need one positive weight per table")
    if any(w <= 0 for w in weights):
        raise VoiError("pooling weights must be positive")
    shape = np.asarray(tables[0]).shape
    for t in tables[1:]:
        if np.asarray(t).shape != shape:
            raise ShapeMismatchError(f"table shapes differ: {np.asarray(t).shape} vs {shape}")
    total = float(sum(weights))
    out = sum(w / total * np.asarray(t, dtype=float) for w, t in zip(weights, tables))
    return out / out.sum(axis=-1, keepdims=True)


def pool_cpts(cpts: Sequence[Cpt], weights: Sequence[float]) -> Cpt:
    """Weighted pseudo-count pooling of same-shaped CPTs; the result keeps the
    first member's child and parent names."""
    if len(cpts) != len(weights) or not cpts:
        raise ShapeMismatchError("need one positive weight per cpt")
    first = cpts[0]
    keys = list(first.table.keys())
    for c in cpts[1:]:
        if set(c.table.keys()) != set(keys) or any(
            len(c.table[k]) != len(first.table[k]) for k in keys
        ):
            raise ShapeMismatchError("cpts do not share a table shape")
    stacked = [np.array([c.table[k] for k in keys], dtype=float) for c in cpts]
    pooled = pool_rows(stacked, weights)
    return Cpt(first.child, first.parents, {k: tuple(row) for k, row in zip(keys, pooled)})


# --- transfer VoI (Monte Carlo) ---------------------------------------------------


def _trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence((seed, trial)).generate_state(1, np.uint64)[0])


def _paired_report(
    kind: str, base: Sequence[float], informed: Sequence[float], seed: int
) -> VoiReport:
    base = np.asarray(base, dtype=float)
    informed = np.asarray(informed, dtype=float)
    diffs = informed - base
    n = len(diffs)
    stderr = float(diffs.std(ddof=1) / math.sqrt(n)) if n > 1 else None
    return VoiReport(
        kind,
        float(diffs.mean()),
        float(base.mean()),
        float(informed.mean()),
        n=n,
        stderr=stderr,
        seed=seed,
    )


def _check_domains(a: DecisionModel, b: DecisionModel) -> None:
    if a.actions != b.actions:
        raise DomainMismatchError(f"action domains differ: {a.actions} vs {b.actions}")
    if a.observations != b.observations:
        raise DomainMismatchError("observation domains differ")
    if a.space.size != b.space.size:
        raise DomainMismatchError("health spaces differ")


def voi_transfer(
    baseline: DecisionModel,
    informed: DecisionModel,
    truth: ScenarioConfig | Mapping | str | Path,
    trials: int,
    seed: int,
    horizon: int | None = None,
) -> VoiReport:
    """Realized-utility delta of running the informed model instead of the
    baseline against the same simulated world, paired seeds per trial."""
    if trials < 1:
        raise VoiError("trials must be >= 1")
    _check_domains(baseline, informed)
    config = truth if isinstance(truth, ScenarioConfig) else load_scenario(truth)
    if config.population.size != 1:
        raise VoiError("transfer VoI runs against a single-structure ground truth")
    t = config.horizon if horizon is None else horizon

    init = np.zeros(baseline.space.size)
    init[initial_state_index(config)] = 1.0

    base_totals: list[float] = []
    informed_totals: list[float] = []
    for i in range(trials):
        world_seed = _trial_seed(seed, i)
        for model, sink in ((baseline, base_totals), (informed, informed_totals)):
            _, world = generate_population(config, world_seed)
            feed = TruthFeed(world, t)
            if world.structures[0].observations != model.observations:
                raise DomainMismatchError("ground truth emits symbols the model does not know")
            steps = rolling_horizon(model, init, t, feed)
            sink.append(sum(s.realized_utility for s in steps))
    return _paired_report("transfer", base_totals, informed_totals, seed)


# --- run-to-failure data harvesting -------------------------------------------------


def _empirical_transition(
    counts: np.ndarray, fallback: np.ndarray
) -> tuple[np.ndarray, float]:
    """Normalised count rows; rows never observed fall back to the prior rows
    (pooling them is then a no-op for those rows)."""
    out = fallback.copy()
    row_totals = counts.sum(axis=1)
    for i, total in enumerate(row_totals):
        if total > 0:
            out[i] = counts[i] / total
    return out, float(row_totals.sum())


def _run_population_trial(
    config: ScenarioConfig,
    world_seed: int,
    sacrifice: str | None,
    prior_weight: float,
    eligibility_threshold: float,
) -> float:
    """One full population rollout; returns total realized utility. With a
    sacrificial member, that member runs to failure under the first action and
    its observed state transitions are pooled into eligible survivors'
    transition models at the moment it first fails."""
    pop = build_population(config, world_seed)
    truth = pop.truth
    horizon = pop.horizon
    neutral = config.actions[0].id

    models = dict(pop.believed)
    beliefs = {st.id: pop.initial_belief(st.id) for st in truth.structures}
    current_obs = initial_observations(truth) if horizon > 0 else {}

    n_states = pop.believed[truth.structures[0].id].space.size
    counts = np.zeros((n_states, n_states))
    pooled = False
    prev_state = truth.states[truth.structure_index(sacrifice)] if sacrifice else None

    total = 0.0
    for _ in range(horizon):
        actions: dict[str, str] = {}
        posteriors: dict[str, np.ndarray] = {}
        for st in truth.structures:
            if st.id == sacrifice:
                actions[st.id] = neutral
                continue
            action, _, post = solve_with_belief(models[st.id], beliefs[st.id], current_obs[st.id])
            actions[st.id] = action
            posteriors[st.id] = post

        result = step(truth, actions)
        total += sum(result.utilities.values())

        if sacrifice and not pooled:
            new_state = truth.states[truth.structure_index(sacrifice)]
            counts[prev_state, new_state] += 1
            prev_state = new_state
            if result.failed[sacrifice]:
                pooled = True
                base_model = models[next(s.id for s in truth.structures if s.id != sacrifice)]
                base_table = base_model.transition.tables[neutral]
                if not isinstance(base_table, np.ndarray) or base_table.ndim != 2:
                    raise VoiError("pooling needs a dense, environment-free believed transition")
                empirical, observed = _empirical_transition(counts, base_table)
                new_table = pool_rows([base_table, empirical], [prior_weight, observed])
                for st in truth.structures:
                    if st.id == sacrifice:
                        continue
                    ok, _ = transfer_eligible(
                        pop.hierarchy, sacrifice, st.id, eligibility_threshold
                    )
                    if not ok:
                        continue
                    old = models[st.id]
                    tables = dict(old.transition.tables)
                    tables[neutral] = new_table
                    models[st.id] = old.with_transition(
                        TransitionModel(old.transition.actions, tables, old.transition.env_states)
                    )

        for st in truth.structures:
            if st.id == sacrifice:
                continue
            beliefs[st.id] = forecast(models[st.id], posteriors[st.id], actions[st.id])
        current_obs = result.observations
    return total


def voi_failure_data(
    population: Population | ScenarioConfig | Mapping | str | Path,
    sacrificial_member: str,
    trials: int,
    seed: int,
) -> VoiReport:
    """Value of letting one member fail for the data: mean realized population
    utility of the run-to-failure policy minus the maintain-all policy."""
    if trials < 1:
        raise VoiError("trials must be >= 1")
    config = (
        population.config
        if isinstance(population, Population)
        else population if isinstance(population, ScenarioConfig) else load_scenario(population)
    )
    members = config.member_ids()
    if sacrificial_member not in members:
        raise VoiError(f"unknown member {sacrificial_member!r}")
    if len(members) < 2:
        raise EligibilityError("failure-data transfer needs at least 2 population members")

    sac_cfg = config.voi.get("sacrifice", {})
    prior_weight = float(sac_cfg.get("prior_weight", 1.0))
    threshold = float(sac_cfg.get("threshold", 0.5))

    hierarchy, _ = generate_population(config, config.seed)
    if not any(
        transfer_eligible(hierarchy, sacrificial_member, m, threshold)[0]
        for m in members
        if m != sacrificial_member
    ):
        raise EligibilityError(
            f"no survivor passes the similarity gate against {sacrificial_member!r}"
        )

    maintain: list[float] = []
    sacrifice: list[float] = []
    for i in range(trials):
        world_seed = _trial_seed(seed, i)
        maintain.append(
            _run_population_trial(config, world_seed, None, prior_weight, threshold)
        )
        sacrifice.append(
            _run_population_trial(
                config, world_seed, sacrificial_member, prior_weight, threshold
            )
        )
    return _paired_report("failure_data", maintain, sacrifice, seed)
