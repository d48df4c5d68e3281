"""Ground-truth wind-farm simulator.

Holds the true world the decision engine never sees directly: per-structure
component states evolving by Markov chains (optionally coupled through a
shared calm/storm environment), noisy observation symbols, and realized
utility accounting through each structure's fault tree. Everything is driven
by named, splittable RNG streams so runs are bit-reproducible: the stream for
a draw is keyed by (master seed, purpose, structure index, step), which makes
the log independent of evaluation order and safe to parallelise across
structures.

Stream purposes: 0 environment step, 1 structure transition, 2 observation
(step key t is the time index at which the controller consumes the symbol;
the initial observation uses t = 0), 3 population generation, 4 environment
initialisation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .decision import (
    DecisionModel,
    FeedExhaustedError,
    UnknownActionError,
    condition_belief,
    forecast,
    solve_with_belief,
)
from .hierarchy import Hierarchy, availability_kofn_k

P_ENV = 0
P_TRANSITION = 1
P_OBSERVATION = 2
P_GENERATE = 3
P_ENV_INIT = 4


class SimError(Exception):
    pass


class UnknownStructureError(SimError):
    pass


def stream(master_seed: int, purpose: int, structure: int, step: int) -> np.random.Generator:
    """The RNG stream for one draw site. PCG64 seeded from the full key."""
    if master_seed < 0:
        raise SimError("master seed must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence((master_seed, purpose, structure, step)))


def sample_index(row: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from a probability row using one uniform."""
    cum = np.cumsum(row)
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, len(row) - 1)


@dataclass
class EnvironmentTruth:
    states: tuple[str, ...]
    initial: np.ndarray
    transition: np.ndarray  # (|E|, |E|)


@dataclass
class StructureTruth:
    """True dynamics of one structure, over the same joint health space the
    believed model uses."""

    id: str
    labels: tuple[str, ...]  # joint state labels, canonical order
    observations: tuple[str, ...]
    transition: Mapping[str, np.ndarray]  # per action, (|H|,|H|) or (|E|,|H|,|H|)
    confusion: np.ndarray  # (|H|, |obs|)
    fail_mask: np.ndarray  # bool (|H|,) top event failed in this joint state
    failure_utility: np.ndarray  # (|H|,) U_F of the realized failure state
    action_cost: Mapping[str, float]


@dataclass
class GroundTruth:
    """The mutable world: advancing it is the only stateful operation here."""

    master_seed: int
    structures: list[StructureTruth]
    env: EnvironmentTruth | None
    states: list[int]
    env_state: int | None
    step_index: int = 0

    def structure_index(self, structure_id: str) -> int:
        for i, st in enumerate(self.structures):
            if st.id == structure_id:
                return i
        raise UnknownStructureError(f"unknown structure id {structure_id!r}")

    def state_label(self, structure_id: str) -> str:
        i = self.structure_index(structure_id)
        return self.structures[i].labels[self.states[i]]

    def failed(self, structure_id: str) -> bool:
        i = self.structure_index(structure_id)
        return bool(self.structures[i].fail_mask[self.states[i]])


@dataclass(frozen=True)
class StepResult:
    step: int
    observations: dict[str, str]  # of the new states; consumed at step + 1
    utilities: dict[str, float]
    failed: dict[str, bool]
    env_state: str | None


def initial_observations(truth: GroundTruth) -> dict[str, str]:
    """Observation symbols for the pre-step states (consumed at t = 0)."""
    out: dict[str, str] = {}
    for idx, st in enumerate(truth.structures):
        u = stream(truth.master_seed, P_OBSERVATION, idx, 0).random()
        out[st.id] = st.observations[sample_index(st.confusion[truth.states[idx]], u)]
    return out


def step(truth: GroundTruth, actions: Mapping[str, str]) -> StepResult:
    """Advance the world one step: environment first, then every structure
    transitions under its action, emits an observation of its new state and
    accrues action cost plus the failure utility of the state it lands in."""
    known = {st.id for st in truth.structures}
    unknown = set(actions) - known
    if unknown:
        raise UnknownStructureError(f"unknown structure ids {sorted(unknown)}")
    missing = known - set(actions)
    if missing:
        raise SimError(f"actions missing for structures {sorted(missing)}")

    t = truth.step_index
    if truth.env is not None:
        u = stream(truth.master_seed, P_ENV, 0, t).random()
        truth.env_state = sample_index(truth.env.transition[truth.env_state], u)

    observations: dict[str, str] = {}
    utilities: dict[str, float] = {}
    failed: dict[str, bool] = {}
    for idx, st in enumerate(truth.structures):
        action = actions[st.id]
        if action not in st.transition:
            raise UnknownActionError(f"structure {st.id!r} has no action {action!r}")
        table = st.transition[action]
        if table.ndim == 3:
            table = table[truth.env_state]
        u = stream(truth.master_seed, P_TRANSITION, idx, t).random()
        truth.states[idx] = sample_index(table[truth.states[idx]], u)

        u = stream(truth.master_seed, P_OBSERVATION, idx, t + 1).random()
        observations[st.id] = st.observations[
            sample_index(st.confusion[truth.states[idx]], u)
        ]
        utilities[st.id] = float(
            st.action_cost[action] + st.failure_utility[truth.states[idx]]
        )
        failed[st.id] = bool(st.fail_mask[truth.states[idx]])

    truth.step_index = t + 1
    env_label = truth.env.states[truth.env_state] if truth.env is not None else None
    return StepResult(t, observations, utilities, failed, env_label)


class TruthFeed:
    """Single-structure rolling-horizon feed over a GroundTruth."""

    def __init__(self, truth: GroundTruth, horizon: int, structure_id: str | None = None):
        if structure_id is None:
            if len(truth.structures) != 1:
                raise SimError("structure_id required for a multi-structure truth")
            structure_id = truth.structures[0].id
        self.truth = truth
        self.structure_id = structure_id
        self.horizon = horizon
        self._next_obs: str | None = None
        self._t = 0

    def next_observation(self) -> str:
        if self._t >= self.horizon:
            raise FeedExhaustedError(f"feed exhausted after {self.horizon} observations")
        if self._t == 0 and self._next_obs is None:
            self._next_obs = initial_observations(self.truth)[self.structure_id]
        return self._next_obs

    def apply_action(self, action: str) -> float:
        result = step(self.truth, {self.structure_id: action})
        self._next_obs = result.observations[self.structure_id]
        self._t += 1
        return result.utilities[self.structure_id]


# --- population generation ---------------------------------------------------


def generate_population(config, seed: int | None = None):
    """Build the S1-S6 hierarchy and the ground truth for a scenario.

    Members of the type inventory share one true CPT family; each member's
    true tables are then mixed row-wise with a uniform table at a per-member
    rate drawn from the generation stream, so a nonzero perturbation scale
    yields a homogeneous-but-not-identical population.
    """
    from . import scenario as _scenario

    return _scenario.generate_population(config, seed)


def build_population(config, seed: int | None = None):
    from . import scenario as _scenario

    return _scenario.build_population(config, seed)


# --- experiments ---------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    structure: str
    env: str | None
    true_state: str
    obs: str
    action: str
    realized_utility: float
    failed: bool

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "structure": self.structure,
            "env": self.env,
            "true_state": self.true_state,
            "obs": self.obs,
            "action": self.action,
            "realized_utility": self.realized_utility,
            "failed": self.failed,
        }


@dataclass
class TrajectoryLog:
    """Append-only record of a population run, one record per (step, structure),
    plus per-step availability and the k-of-n population failure indicator."""

    k: int
    records: list[TrajectoryRecord] = field(default_factory=list)
    availability: list[float] = field(default_factory=list)
    population_failed: list[bool] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.records)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())


def run_experiment(
    config,
    seed: int | None = None,
    policy: str = "meu",
) -> tuple[TrajectoryLog, dict]:
    """Run a scenario end to end: generate the population, drive every
    structure's controller over the horizon, log, and summarise.

    `policy` is "meu" for the believed-model controller, or an action id for a
    constant baseline (the believed model is then bypassed entirely).
    """
    from . import scenario as _scenario

    pop = _scenario.build_population(config, seed)
    truth = pop.truth
    n = len(truth.structures)
    k = availability_kofn_k(n, pop.availability) if n > 0 else 1
    log = TrajectoryLog(k=k)

    beliefs = {st.id: pop.initial_belief(st.id) for st in truth.structures}
    current_obs = initial_observations(truth) if pop.horizon > 0 else {}

    total_utility = 0.0
    for _ in range(pop.horizon):
        actions: dict[str, str] = {}
        posteriors: dict[str, np.ndarray] = {}
        for st in truth.structures:
            obs = current_obs[st.id]
            if policy == "meu":
                action, _, post = solve_with_belief(pop.believed[st.id], beliefs[st.id], obs)
                posteriors[st.id] = post
            else:
                action = policy
            actions[st.id] = action

        result = step(truth, actions)
        failed_count = sum(1 for f in result.failed.values() if f)
        log.availability.append(1.0 - failed_count / n)
        log.population_failed.append(failed_count >= k)
        for st in truth.structures:
            log.records.append(
                TrajectoryRecord(
                    step=result.step,
                    structure=st.id,
                    env=result.env_state,
                    true_state=truth.state_label(st.id),
                    obs=current_obs[st.id],
                    action=actions[st.id],
                    realized_utility=result.utilities[st.id],
                    failed=result.failed[st.id],
                )
            )
            total_utility += result.utilities[st.id]

        if policy == "meu":
            for st in truth.structures:
                beliefs[st.id] = forecast(
                    pop.believed[st.id], posteriors[st.id], actions[st.id]
                )
        current_obs = result.observations

    steps_run = pop.horizon
    summary = {
        "scenario": pop.name,
        "seed": pop.master_seed,
        "policy": policy,
        "horizon": steps_run,
        "structures": n,
        "k": k,
        "total_utility": total_utility,
        "mean_utility_per_structure_step": (
            total_utility / (n * steps_run) if n * steps_run else 0.0
        ),
        "availability_violations": sum(1 for f in log.population_failed if f),
        "min_availability": min(log.availability) if log.availability else 1.0,
    }
    return log, summary


def save_summary(summary: Mapping, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def hierarchy_digest(hierarchy: Hierarchy) -> str:
    """Stable content hash of a hierarchy, for golden-file checks."""
    from .hierarchy import hierarchy_to_dict

    canonical = json.dumps(hierarchy_to_dict(hierarchy), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()
