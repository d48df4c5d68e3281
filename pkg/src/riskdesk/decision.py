"""The one-slice maintenance decision process and its exact solution.

The model couples four parts: a classifier that turns an observation symbol
into a belief over the joint health state H, a per-action transition model
forecasting H one step ahead, a compiled failure network mapping health states
to a failure variable, and utility tables over failure states (at the current
and the forecast slice) and over actions. Expected utility of an action given
an observation is

    U_d(d) + sum_h P(h | obs) * E[U_F(F) | h]  +  sum_h' P(h' | obs, d) * E[U_F'(F) | h']

and the solver simply maximises it over the declared action order, first
declared winning ties. A rolling horizon repeats the single slice greedily:
observe, solve, act, then carry the belief forward by forecast-then-condition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .pgm import (
    BayesNet,
    InconsistentEvidenceError,
    SUM_TOL,
    Variable,
    infer,
)

GENERATIVE = "generative"
DISCRIMINATIVE = "discriminative"


class DecisionError(Exception):
    pass


class UnknownActionError(DecisionError):
    pass


class UnknownObservationError(DecisionError):
    pass


class EmptyActionDomainError(DecisionError):
    pass


class FeedExhaustedError(DecisionError):
    """The ground-truth feed ran out before the horizon was reached."""


def _check_rows(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if (arr < 0).any():
        raise DecisionError(f"{name}: negative probability entry")
    sums = arr.sum(axis=-1)
    if np.abs(sums - 1.0).max() > SUM_TOL:
        raise DecisionError(f"{name}: rows must sum to 1 (max deviation {np.abs(sums - 1).max()})")
    return arr


@dataclass(frozen=True)
class HealthStateSpace:
    """Joint health state H as the lexicographic product of component states."""

    components: tuple[Variable, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise DecisionError("health space needs at least one component")
        joint = tuple(itertools.product(*(v.states for v in self.components)))
        object.__setattr__(self, "_joint", joint)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(joint)})

    @property
    def size(self) -> int:
        return len(self._joint)

    @property
    def joint_states(self) -> tuple[tuple[str, ...], ...]:
        return self._joint

    def label(self, i: int) -> str:
        return "|".join(self._joint[i])

    @property
    def labels(self) -> list[str]:
        return [self.label(i) for i in range(self.size)]

    def index_of(self, component_states: Sequence[str]) -> int:
        return self._index[tuple(component_states)]

    def component_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.components)


@dataclass(frozen=True)
class ClassifierModel:
    """Observation model. Generative: P(obs | H) plus a prior over H.
    Discriminative: P(H | obs) plus a prior over observations (needed for
    any preposterior computation, e.g. policy values and value of information)."""

    form: str
    observations: tuple[str, ...]
    likelihood: np.ndarray | None = None  # (|H|, |obs|), generative
    health_prior: np.ndarray | None = None  # (|H|,), generative
    posterior_table: np.ndarray | None = None  # (|obs|, |H|), discriminative
    obs_prior: np.ndarray | None = None  # (|obs|,), discriminative

    @staticmethod
    def generative(
        observations: Sequence[str], likelihood: np.ndarray, prior: np.ndarray
    ) -> "ClassifierModel":
        likelihood = _check_rows("classifier likelihood", likelihood)
        prior = _check_rows("health prior", np.asarray(prior, dtype=float)[None, :])[0]
        if likelihood.shape != (prior.shape[0], len(observations)):
            raise DecisionError("classifier likelihood shape does not match prior/observations")
        return ClassifierModel(
            GENERATIVE, tuple(observations), likelihood=likelihood, health_prior=prior
        )

    @staticmethod
    def discriminative(
        observations: Sequence[str], posterior_table: np.ndarray, obs_prior: np.ndarray
    ) -> "ClassifierModel":
        posterior_table = _check_rows("classifier posterior table", posterior_table)
        obs_prior = _check_rows("observation prior", np.asarray(obs_prior, dtype=float)[None, :])[0]
        if posterior_table.shape[0] != len(observations) or obs_prior.shape[0] != len(observations):
            raise DecisionError("classifier table shape does not match observations")
        return ClassifierModel(
            DISCRIMINATIVE, tuple(observations), posterior_table=posterior_table, obs_prior=obs_prior
        )

    def obs_index(self, obs: str) -> int:
        try:
            return self.observations.index(obs)
        except ValueError:
            raise UnknownObservationError(f"unknown observation symbol {obs!r}") from None

    def prior(self) -> np.ndarray:
        if self.form == GENERATIVE:
            return self.health_prior.copy()
        return self.obs_prior @ self.posterior_table

    def obs_marginal(self) -> np.ndarray:
        if self.form == GENERATIVE:
            return self.health_prior @ self.likelihood
        return self.obs_prior.copy()

    def likelihood_column(self, obs_idx: int) -> np.ndarray:
        """L(h) proportional to P(obs | h), usable against any current belief."""
        if self.form == GENERATIVE:
            return self.likelihood[:, obs_idx]
        prior = self.prior()
        col = self.posterior_table[obs_idx] * self.obs_prior[obs_idx]
        out = np.zeros_like(col)
        nz = prior > 0
        out[nz] = col[nz] / prior[nz]
        return out


@dataclass(frozen=True)
class TransitionModel:
    """P(H_{t+1} | H_t, d), one table per action; optionally conditioned on a
    shared environment variable (leading axis).

    Each action's entry is either an explicit (|H|, |H|) table (or
    (|E|, |H|, |H|) when environment-conditioned) or, for large product
    spaces, a tuple of per-component matrices: components then evolve
    conditionally independently given the action, and the joint table is
    their Kronecker product, never materialised."""

    actions: tuple[str, ...]
    tables: Mapping[str, np.ndarray | tuple[np.ndarray, ...]]
    env_states: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        tables = {}
        for a in self.actions:
            if a not in self.tables:
                raise DecisionError(f"transition table missing for action {a!r}")
            entry = self.tables[a]
            if isinstance(entry, tuple):
                if self.env_states:
                    raise DecisionError(
                        f"transition[{a}]: factored tables cannot be environment-conditioned"
                    )
                entry = tuple(
                    _check_rows(f"transition[{a}] component {i}", m)
                    for i, m in enumerate(entry)
                )
                for m in entry:
                    if m.ndim != 2 or m.shape[0] != m.shape[1]:
                        raise DecisionError(f"transition[{a}]: component factors must be square")
            else:
                entry = _check_rows(f"transition[{a}]", entry)
                want_ndim = 3 if self.env_states else 2
                if entry.ndim != want_ndim:
                    raise DecisionError(
                        f"transition[{a}] must have {want_ndim} axes, got {entry.ndim}"
                    )
                if self.env_states and entry.shape[0] != len(self.env_states):
                    raise DecisionError(f"transition[{a}] environment axis mismatch")
            tables[a] = entry
        object.__setattr__(self, "tables", tables)

    def is_factored(self, action: str) -> bool:
        return isinstance(self.tables[action], tuple)

    def action_index(self, action: str) -> int:
        try:
            return self.actions.index(action)
        except ValueError:
            raise UnknownActionError(f"unknown action {action!r}") from None


def apply_factored(belief: np.ndarray, factors: tuple[np.ndarray, ...]) -> np.ndarray:
    """belief @ kron(factors) without materialising the joint table."""
    cards = tuple(m.shape[0] for m in factors)
    tensor = np.asarray(belief, dtype=float).reshape(cards)
    for axis, m in enumerate(factors):
        tensor = np.moveaxis(np.tensordot(tensor, m, axes=([axis], [0])), -1, axis)
    return tensor.reshape(-1)


@dataclass(frozen=True)
class UtilityModel:
    """Utility tables: failure-variable states at the current and forecast
    slice, and actions. All values finite reals."""

    failure_now: Mapping[str, float]
    failure_next: Mapping[str, float]
    action: Mapping[str, float]

    @staticmethod
    def simple(failure: Mapping[str, float], action: Mapping[str, float]) -> "UtilityModel":
        return UtilityModel(dict(failure), dict(failure), dict(action))

    def __post_init__(self) -> None:
        for name, table in (("failure_now", self.failure_now),
                            ("failure_next", self.failure_next),
                            ("action", self.action)):
            for k, v in table.items():
                if not np.isfinite(v):
                    raise DecisionError(f"utility {name}[{k!r}] is not finite")


@dataclass
class FailureModel:
    """The compiled failure network plus the designated failure variable.

    `distribution_matrix` caches P(F = f | H = h) for every joint health
    state; with deterministic gate CPTs each row is a point mass.
    """

    net: BayesNet
    failure_variable: str
    health_variables: tuple[str, ...]
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def failure_states(self) -> tuple[str, ...]:
        return self.net.var(self.failure_variable).states

    def distribution_matrix(self, space: HealthStateSpace) -> np.ndarray:
        if self._matrix is None:
            if tuple(space.component_ids()) != tuple(self.health_variables):
                raise DecisionError("failure model health variables do not match the space")
            rows = []
            fv = self.failure_variable
            for joint in space.joint_states:
                ev = dict(zip(self.health_variables, joint))
                if fv in ev:
                    row = [1.0 if s == ev[fv] else 0.0 for s in self.failure_states]
                else:
                    row = list(infer(self.net, ev, fv).distribution)
                rows.append(row)
            self._matrix = np.array(rows, dtype=float)
        return self._matrix


@dataclass(frozen=True)
class Policy:
    """A total map from observation symbols to actions."""

    actions: Mapping[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", dict(self.actions))

    def __call__(self, obs: str) -> str:
        try:
            return self.actions[obs]
        except KeyError:
            raise UnknownObservationError(f"policy has no entry for {obs!r}") from None


@dataclass
class DecisionModel:
    """Everything needed to score and pick a maintenance action for one
    structure. Immutable in use; `with_transition` derives a variant and keeps
    the (expensive) failure-distribution cache."""

    space: HealthStateSpace
    classifier: ClassifierModel
    transition: TransitionModel
    failure: FailureModel
    utilities: UtilityModel
    env_prior: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.space.size
        if self.classifier.prior().shape[0] != n:
            raise DecisionError("classifier dimensions do not match the health space")
        for a in self.transition.actions:
            entry = self.transition.tables[a]
            if isinstance(entry, tuple):
                expected = tuple(v.card for v in self.space.components)
                if tuple(m.shape[0] for m in entry) != expected:
                    raise DecisionError(
                        f"transition[{a}] component factors do not match the health space"
                    )
            elif entry.shape[-2:] != (n, n):
                raise DecisionError(f"transition[{a}] does not match the health space size {n}")
        if self.transition.env_states is not None:
            if self.env_prior is None:
                raise DecisionError("environment-conditioned transitions need env_prior")
            self.env_prior = _check_rows("env prior", np.asarray(self.env_prior)[None, :])[0]
            if self.env_prior.shape[0] != len(self.transition.env_states):
                raise DecisionError("env_prior does not match env states")
        for s in self.failure.failure_states:
            if s not in self.utilities.failure_now or s not in self.utilities.failure_next:
                raise DecisionError(f"utility table missing failure state {s!r}")
        for a in self.transition.actions:
            if a not in self.utilities.action:
                raise DecisionError(f"utility table missing action {a!r}")
        self._effective: dict[str, np.ndarray | tuple[np.ndarray, ...]] = {}
        for a in self.transition.actions:
            t = self.transition.tables[a]
            if isinstance(t, np.ndarray) and t.ndim == 3:
                t = np.tensordot(self.env_prior, t, axes=1)
            self._effective[a] = t

    @property
    def actions(self) -> tuple[str, ...]:
        return self.transition.actions

    @property
    def observations(self) -> tuple[str, ...]:
        return self.classifier.observations

    def propagate(self, belief: np.ndarray, action: str) -> np.ndarray:
        """belief pushed one step ahead under an action, unnormalised."""
        self.transition.action_index(action)
        entry = self._effective[action]
        if isinstance(entry, tuple):
            return apply_factored(belief, entry)
        return belief @ entry

    def transition_matrix(self, action: str) -> np.ndarray:
        """The dense (environment-marginalised) table; materialises factored
        representations, so prefer `propagate` for large spaces."""
        self.transition.action_index(action)
        entry = self._effective[action]
        if isinstance(entry, tuple):
            dense = entry[0]
            for m in entry[1:]:
                dense = np.kron(dense, m)
            return dense
        return entry

    def failure_utility_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.failure.distribution_matrix(self.space)
        u_now = np.array([self.utilities.failure_now[s] for s in self.failure.failure_states])
        u_next = np.array([self.utilities.failure_next[s] for s in self.failure.failure_states])
        return m @ u_now, m @ u_next

    def with_transition(self, transition: TransitionModel) -> "DecisionModel":
        return DecisionModel(
            self.space, self.classifier, transition, self.failure, self.utilities, self.env_prior
        )


# --- single-slice operations -------------------------------------------------


def condition_belief(model: DecisionModel, belief: np.ndarray, obs: str) -> np.ndarray:
    """Bayes-condition an arbitrary belief over H on one observation symbol."""
    idx = model.classifier.obs_index(obs)
    post = np.asarray(belief, dtype=float) * model.classifier.likelihood_column(idx)
    total = post.sum()
    if total == 0.0:
        raise InconsistentEvidenceError(
            f"observation {obs!r} has zero probability under the current belief"
        )
    return post / total


def posterior_health(model: DecisionModel, obs: str) -> np.ndarray:
    """Belief over H given one observation, from the model's own prior."""
    idx = model.classifier.obs_index(obs)
    if model.classifier.form == DISCRIMINATIVE:
        return model.classifier.posterior_table[idx].copy()
    return condition_belief(model, model.classifier.prior(), obs)


def forecast(model: DecisionModel, belief: np.ndarray, action: str) -> np.ndarray:
    """One-step-ahead belief under an action (environment marginalised)."""
    belief = np.asarray(belief, dtype=float)
    out = model.propagate(belief, action)
    total = out.sum()
    if total == 0.0:
        raise DecisionError("forecast produced an empty distribution")
    return out / total


def _expected_utility_of_posterior(
    model: DecisionModel, posterior: np.ndarray, action: str
) -> float:
    euf_now, euf_next = model.failure_utility_vectors()
    ahead = model.propagate(posterior, action)
    return (
        model.utilities.action[action]
        + float(posterior @ euf_now)
        + float(ahead @ euf_next)
    )


def expected_utility(model: DecisionModel, obs: str, action: str) -> float:
    """Risk-weighted value of taking `action` after seeing `obs`: the action
    cost plus expected failure utility at the current and forecast slice."""
    model.transition.action_index(action)
    return _expected_utility_of_posterior(model, posterior_health(model, obs), action)


def expected_utility_from_belief(model: DecisionModel, belief: np.ndarray, action: str) -> float:
    """Same as `expected_utility` but against an explicit belief over H."""
    model.transition.action_index(action)
    return _expected_utility_of_posterior(model, np.asarray(belief, dtype=float), action)


def _argmax_action(model: DecisionModel, posterior: np.ndarray) -> tuple[str, float]:
    if not model.actions:
        raise EmptyActionDomainError("decision model declares no actions")
    best_action, best_value = None, -np.inf
    for a in model.actions:  # first declared wins ties
        v = _expected_utility_of_posterior(model, posterior, a)
        if v > best_value:
            best_action, best_value = a, v
    return best_action, best_value


def solve_single_stage(model: DecisionModel, obs: str) -> tuple[str, float]:
    """The maximum-expected-utility action for one observation."""
    return _argmax_action(model, posterior_health(model, obs))


def solve_with_belief(
    model: DecisionModel, belief: np.ndarray, obs: str
) -> tuple[str, float, np.ndarray]:
    """Single-stage solve against an explicit current belief (rolling use)."""
    posterior = condition_belief(model, belief, obs)
    action, value = _argmax_action(model, posterior)
    return action, value, posterior


def solve_policy(model: DecisionModel) -> tuple[Policy, float]:
    """Best action per observation symbol, and the preposterior value
    sum_obs P(obs) * MEU(obs). Zero-probability symbols get the best
    prior-belief action so the policy stays total."""
    p_obs = model.classifier.obs_marginal()
    prior = model.classifier.prior()
    mapping: dict[str, str] = {}
    total = 0.0
    for i, obs in enumerate(model.observations):
        if p_obs[i] > 0.0:
            action, value = solve_single_stage(model, obs)
            total += p_obs[i] * value
        else:
            action, _ = _argmax_action(model, prior)
        mapping[obs] = action
    return Policy(mapping), total


def best_prior_action(model: DecisionModel) -> tuple[str, float]:
    """The no-observation benchmark: argmax_d sum_obs P(obs) EU(d | obs)."""
    if not model.actions:
        raise EmptyActionDomainError("decision model declares no actions")
    p_obs = model.classifier.obs_marginal()
    best_action, best_value = None, -np.inf
    for a in model.actions:
        v = 0.0
        for i, obs in enumerate(model.observations):
            if p_obs[i] > 0.0:
                v += p_obs[i] * expected_utility(model, obs, a)
        if v > best_value:
            best_action, best_value = a, float(v)
    return best_action, best_value


# --- rolling horizon -----------------------------------------------------------


class GroundTruthFeed(Protocol):
    """What a rolling run needs from the world: an observation per step and a
    realized utility per applied action. Raises FeedExhaustedError when out."""

    def next_observation(self) -> str: ...

    def apply_action(self, action: str) -> float: ...


@dataclass(frozen=True)
class RollingStep:
    obs: str
    action: str
    realized_utility: float
    belief: tuple[float, ...]  # posterior after conditioning on obs
    meu: float


def rolling_horizon(
    model: DecisionModel,
    initial_belief: np.ndarray | None,
    horizon: int,
    feed: GroundTruthFeed,
) -> list[RollingStep]:
    """Greedy per-slice re-solve: observe, pick the MEU action, act, then
    carry the belief forward by forecast-then-condition."""
    if horizon < 1:
        raise DecisionError(f"horizon must be >= 1, got {horizon}")
    belief = (
        model.classifier.prior()
        if initial_belief is None
        else _check_rows("initial belief", np.asarray(initial_belief, dtype=float)[None, :])[0]
    )
    steps: list[RollingStep] = []
    for _ in range(horizon):
        obs = feed.next_observation()
        action, value, posterior = solve_with_belief(model, belief, obs)
        realized = feed.apply_action(action)
        steps.append(RollingStep(obs, action, realized, tuple(posterior), value))
        belief = forecast(model, posterior, action)
    return steps
