from dataclasses import replace

import numpy as np
import pytest

from helpers import (
    oracle_best_strategy,
    oracle_expected_utility,
    random_decision_model,
    weather_model,
)
from riskdesk.decision import (
    ClassifierModel,
    DecisionModel,
    EmptyActionDomainError,
    FailureModel,
    FeedExhaustedError,
    HealthStateSpace,
    TransitionModel,
    UnknownActionError,
    UnknownObservationError,
    UtilityModel,
    best_prior_action,
    condition_belief,
    expected_utility,
    forecast,
    posterior_health,
    rolling_horizon,
    solve_policy,
    solve_single_stage,
    solve_with_belief,
)
from riskdesk.pgm import BayesNet, Cpt, InconsistentEvidenceError, Variable, enumerate_infer


def single_component_model(
    u_fail_next=-10.0,
    u_fail_now=0.0,
    cost_fix=-3.0,
    accuracy=1.0,
    degrade=0.0,
) -> DecisionModel:
    """Binary component, OR tree, identity-style classifier, leave/fix actions."""
    comp = Variable("c", ("good", "bad"))
    space = HealthStateSpace((comp,))
    n = 2
    likelihood = np.array(
        [[accuracy, 1 - accuracy], [1 - accuracy, accuracy]]
    )
    classifier = ClassifierModel.generative(
        ("see_good", "see_bad"), likelihood, np.array([0.5, 0.5])
    )
    transition = TransitionModel(
        ("leave", "fix"),
        {
            "leave": np.array([[1 - degrade, degrade], [0.0, 1.0]]),
            "fix": np.array([[1.0, 0.0], [1.0, 0.0]]),
        },
    )
    top = Variable("top", ("ok", "failed"))
    net = BayesNet(
        [comp, top],
        [
            Cpt("c", (), {(): (0.5, 0.5)}),
            Cpt("top", ("c",), {("good",): (1.0, 0.0), ("bad",): (0.0, 1.0)}),
        ],
    )
    failure = FailureModel(net, "top", ("c",))
    utilities = UtilityModel(
        {"ok": 0.0, "failed": u_fail_now},
        {"ok": 0.0, "failed": u_fail_next},
        {"leave": 0.0, "fix": cost_fix},
    )
    return DecisionModel(space, classifier, transition, failure, utilities)


class TestPosteriorHealth:
    def test_noise_free_classifier_gives_point_mass(self):
        model = single_component_model(accuracy=1.0)
        assert posterior_health(model, "see_bad") == pytest.approx([0.0, 1.0])
        assert posterior_health(model, "see_good") == pytest.approx([1.0, 0.0])

    def test_uniform_confusion_returns_prior(self):
        comp = Variable("c", ("a", "b", "cc"))
        space = HealthStateSpace((comp,))
        prior = np.array([0.2, 0.5, 0.3])
        classifier = ClassifierModel.generative(
            ("o1", "o2"), np.full((3, 2), 0.5), prior
        )
        model = _wrap_minimal(space, classifier)
        assert posterior_health(model, "o1") == pytest.approx(prior)

    def test_random_matches_two_node_network_enumeration(self):
        rng = np.random.default_rng(123)
        h_states = tuple(f"h{i}" for i in range(4))
        obs_states = tuple(f"v{i}" for i in range(4))
        for _ in range(20):
            prior = rng.random(4) + 0.05
            prior /= prior.sum()
            rows = rng.random((4, 4)) + 0.05
            rows /= rows.sum(axis=1, keepdims=True)

            hvar = Variable("H", h_states)
            space = HealthStateSpace((hvar,))
            classifier = ClassifierModel.generative(obs_states, rows, prior)
            model = _wrap_minimal(space, classifier, states=h_states)

            nu = Variable("nu", obs_states)
            net = BayesNet(
                [hvar, nu],
                [
                    Cpt("H", (), {(): tuple(prior)}),
                    Cpt("nu", ("H",), {(s,): tuple(rows[i]) for i, s in enumerate(h_states)}),
                ],
            )
            obs = obs_states[int(rng.integers(0, 4))]
            expected = enumerate_infer(net, {"nu": obs}, "H").distribution
            assert posterior_health(model, obs) == pytest.approx(expected, abs=1e-9)

    def test_discriminative_is_table_lookup(self):
        table = np.array([[0.7, 0.3], [0.1, 0.9]])
        classifier = ClassifierModel.discriminative(("o0", "o1"), table, np.array([0.5, 0.5]))
        comp = Variable("c", ("good", "bad"))
        model = _wrap_minimal(HealthStateSpace((comp,)), classifier, states=("good", "bad"))
        assert posterior_health(model, "o1") == pytest.approx(table[1])

    def test_zero_marginal_observation_rejected(self):
        comp = Variable("c", ("good", "bad"))
        space = HealthStateSpace((comp,))
        classifier = ClassifierModel.generative(
            ("oa", "ob"), np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.5])
        )
        model = _wrap_minimal(space, classifier, states=("good", "bad"))
        with pytest.raises(InconsistentEvidenceError):
            posterior_health(model, "ob")

    def test_unknown_observation_rejected(self):
        model = single_component_model()
        with pytest.raises(UnknownObservationError):
            posterior_health(model, "see_purple")


def _wrap_minimal(space, classifier, states=None):
    """A model whose transition and utilities are inert, for classifier tests."""
    states = states or space.components[0].states
    n = space.size
    transition = TransitionModel(("noop",), {"noop": np.eye(n)})
    comp = space.components[0]
    top = Variable("mirror", comp.states)
    net = BayesNet(
        [comp, top],
        [
            Cpt(comp.id, (), {(): tuple(1.0 / comp.card for _ in comp.states)}),
            Cpt(
                "mirror",
                (comp.id,),
                {
                    (s,): tuple(1.0 if t == s else 0.0 for t in comp.states)
                    for s in comp.states
                },
            ),
        ],
    )
    failure = FailureModel(net, "mirror", (comp.id,))
    utilities = UtilityModel(
        {s: 0.0 for s in comp.states}, {s: 0.0 for s in comp.states}, {"noop": 0.0}
    )
    return DecisionModel(space, classifier, transition, failure, utilities)


class TestForecast:
    def test_identity_transition_is_noop(self):
        model = single_component_model(degrade=0.0)
        belief = np.array([0.3, 0.7])
        assert forecast(model, belief, "leave") == pytest.approx(belief)

    def test_perfect_repair_forces_healthy(self):
        model = single_component_model()
        for belief in ([0.3, 0.7], [1.0, 0.0], [0.0, 1.0]):
            assert forecast(model, np.array(belief), "fix") == pytest.approx([1.0, 0.0])

    def test_uniform_belief_matches_dense_multiply(self):
        rng = np.random.default_rng(321)
        model = random_decision_model(rng, n_obs=3, n_actions=2, n_components=3)
        n = model.space.size
        belief = np.full(n, 1.0 / n)
        action = model.actions[0]
        table = model.transition.tables[action]
        expected = [
            sum(belief[h] * table[h, h2] for h in range(n)) for h2 in range(n)
        ]
        assert forecast(model, belief, action) == pytest.approx(expected, abs=1e-12)

    def test_unknown_action_rejected(self):
        model = single_component_model()
        with pytest.raises(UnknownActionError):
            forecast(model, np.array([1.0, 0.0]), "paint")


class TestExpectedUtility:
    def test_zero_failure_utility_leaves_action_cost(self):
        model = single_component_model(u_fail_next=0.0, u_fail_now=0.0, cost_fix=-3.0)
        assert expected_utility(model, "see_bad", "fix") == pytest.approx(-3.0)
        assert expected_utility(model, "see_good", "leave") == pytest.approx(0.0)

    def test_deterministic_world_counts_failure_twice(self):
        model = single_component_model(u_fail_next=-100.0, u_fail_now=-100.0, cost_fix=-3.0)
        # obs pins the component bad; leaving keeps it bad at t+1
        assert expected_utility(model, "see_bad", "leave") == pytest.approx(-200.0)

    def test_weather_values_match_enumeration_oracle(self):
        model = weather_model()
        for obs in model.observations:
            for action in model.actions:
                assert expected_utility(model, obs, action) == pytest.approx(
                    oracle_expected_utility(model, obs, action), abs=1e-9
                )
        assert expected_utility(model, "forecast_good", "walk") == pytest.approx(16 / 7)
        assert expected_utility(model, "forecast_bad", "walk") == pytest.approx(-7 / 11)
        assert expected_utility(model, "forecast_bad", "TV") == pytest.approx(1.0)


class TestSolve:
    def test_dominant_action_cost_only(self):
        model = single_component_model(u_fail_next=0.0, u_fail_now=0.0, cost_fix=-3.0)
        action, value = solve_single_stage(model, "see_bad")
        assert action == "leave" and value == pytest.approx(0.0)

    def test_tie_broken_by_declaration_order(self):
        comp = Variable("c", ("good", "bad"))
        space = HealthStateSpace((comp,))
        classifier = ClassifierModel.generative(
            ("o",), np.array([[1.0], [1.0]]), np.array([0.5, 0.5])
        )
        transition = TransitionModel(
            ("second", "first"), {"second": np.eye(2), "first": np.eye(2)}
        )
        top = Variable("top", ("ok", "failed"))
        net = BayesNet(
            [comp, top],
            [
                Cpt("c", (), {(): (0.5, 0.5)}),
                Cpt("top", ("c",), {("good",): (1.0, 0.0), ("bad",): (0.0, 1.0)}),
            ],
        )
        failure = FailureModel(net, "top", ("c",))
        utilities = UtilityModel(
            {"ok": 0.0, "failed": 0.0}, {"ok": 0.0, "failed": 0.0},
            {"second": -1.0, "first": -1.0},
        )
        model = DecisionModel(space, classifier, transition, failure, utilities)
        action, _ = solve_single_stage(model, "o")
        assert action == "second"  # first declared wins the tie

    def test_weather_policy_matches_exhaustive_enumeration(self):
        model = weather_model()
        policy, value = solve_policy(model)
        oracle_policy, oracle_value = oracle_best_strategy(model)
        assert policy.actions == oracle_policy
        assert value == pytest.approx(oracle_value, abs=1e-9)
        assert value == pytest.approx(1.72, abs=1e-9)
        assert policy("forecast_good") == "walk"
        assert policy("forecast_bad") == "TV"

    def test_uninformative_observations_constant_policy(self):
        model = single_component_model(accuracy=0.5, u_fail_next=-10.0, cost_fix=-3.0)
        policy, value = solve_policy(model)
        assert len(set(policy.actions.values())) == 1
        _, baseline = best_prior_action(model)
        assert value == pytest.approx(baseline, abs=1e-12)

    def test_perfect_observations_map_states_to_their_best_actions(self):
        model = single_component_model(accuracy=1.0, u_fail_next=-10.0, cost_fix=-3.0)
        policy, _ = solve_policy(model)
        assert policy("see_good") == "leave"
        assert policy("see_bad") == "fix"

    def test_zero_probability_symbol_still_mapped(self):
        comp = Variable("c", ("good", "bad"))
        space = HealthStateSpace((comp,))
        classifier = ClassifierModel.generative(
            ("seen", "never"), np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([0.6, 0.4])
        )
        model = replace(_wrap_minimal(space, classifier), classifier=classifier)
        policy, _ = solve_policy(model)
        assert set(policy.actions) == {"seen", "never"}

    def test_empty_action_domain_rejected(self):
        model = single_component_model()
        bare = replace(model, transition=TransitionModel((), {}))
        with pytest.raises(EmptyActionDomainError):
            solve_single_stage(bare, "see_bad")

    def test_policy_oracle_equivalence_seeded_sweep(self):
        rng = np.random.default_rng(2024)
        for _ in range(60):
            model = random_decision_model(
                rng,
                n_obs=int(rng.integers(2, 5)),
                n_actions=int(rng.integers(2, 5)),
                n_components=int(rng.integers(1, 4)),
            )
            policy, value = solve_policy(model)
            oracle_policy, oracle_value = oracle_best_strategy(model)
            assert value == pytest.approx(oracle_value, abs=1e-9)
            assert policy.actions == oracle_policy


class TestAffineInvariance:
    @staticmethod
    def _transformed(model, a, b):
        u = model.utilities
        scale = lambda t: {k: a * v + b for k, v in t.items()}
        return replace(
            model,
            utilities=UtilityModel(scale(u.failure_now), scale(u.failure_next), scale(u.action)),
        )

    def test_argmax_is_invariant(self):
        rng = np.random.default_rng(555)
        for _ in range(25):
            model = random_decision_model(rng, n_obs=3, n_actions=3, n_components=2)
            a = float(rng.uniform(0.1, 5.0))
            b = float(rng.uniform(-20, 20))
            scaled = self._transformed(model, a, b)
            for obs in model.observations:
                base_action, _ = solve_single_stage(model, obs)
                scaled_action, _ = solve_single_stage(scaled, obs)
                assert base_action == scaled_action

    def test_tie_sets_preserved(self):
        model = single_component_model(u_fail_next=0.0, u_fail_now=0.0, cost_fix=0.0)
        scaled = self._transformed(model, 3.0, 7.0)
        for obs in model.observations:
            base = {
                a: expected_utility(model, obs, a) for a in model.actions
            }
            after = {
                a: expected_utility(scaled, obs, a) for a in model.actions
            }
            base_ties = {a for a, v in base.items() if v == max(base.values())}
            after_ties = {a for a, v in after.items() if abs(v - max(after.values())) < 1e-9}
            assert base_ties == after_ties


class ScriptedFeed:
    def __init__(self, observations, utility=0.0):
        self.observations = list(observations)
        self.utility = utility
        self.applied = []

    def next_observation(self):
        if not self.observations:
            raise FeedExhaustedError("scripted feed exhausted")
        return self.observations.pop(0)

    def apply_action(self, action):
        self.applied.append(action)
        return self.utility


class TestRollingHorizon:
    def test_horizon_one_reduces_to_single_stage(self):
        model = single_component_model(accuracy=0.8, u_fail_next=-10.0, cost_fix=-3.0, degrade=0.1)
        expected_action, expected_value = solve_single_stage(model, "see_bad")
        steps = rolling_horizon(model, None, 1, ScriptedFeed(["see_bad"]))
        assert len(steps) == 1
        assert steps[0].action == expected_action
        assert steps[0].meu == pytest.approx(expected_value)

    def test_static_healthy_system_never_acts(self):
        model = single_component_model(
            accuracy=1.0, u_fail_next=-10.0, u_fail_now=-10.0, cost_fix=-3.0, degrade=0.0
        )
        feed = ScriptedFeed(["see_good"] * 10)
        steps = rolling_horizon(model, np.array([1.0, 0.0]), 10, feed)
        assert all(s.action == "leave" for s in steps)
        assert sum(s.realized_utility for s in steps) == 0.0

    def test_beliefs_stay_normalized(self):
        rng = np.random.default_rng(99)
        model = random_decision_model(rng, n_obs=3, n_actions=2, n_components=2)
        obs = [model.observations[int(rng.integers(0, 3))] for _ in range(30)]
        steps = rolling_horizon(model, None, 30, ScriptedFeed(obs))
        for s in steps:
            assert sum(s.belief) == pytest.approx(1.0, abs=1e-9)

    def test_feed_exhaustion_raises(self):
        model = single_component_model()
        with pytest.raises(FeedExhaustedError):
            rolling_horizon(model, None, 5, ScriptedFeed(["see_good"]))

    def test_more_information_never_hurts(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            model = random_decision_model(
                rng, n_obs=int(rng.integers(2, 5)), n_actions=int(rng.integers(2, 4))
            )
            _, informed = solve_policy(model)
            _, baseline = best_prior_action(model)
            assert informed >= baseline - 1e-9


class TestFactoredTransition:
    def test_factored_matches_dense_kron_on_small_cases(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            cards = [int(rng.integers(2, 4)) for _ in range(3)]
            factors = []
            for c in cards:
                m = rng.random((c, c)) + 0.05
                factors.append(m / m.sum(axis=1, keepdims=True))
            dense = factors[0]
            for m in factors[1:]:
                dense = np.kron(dense, m)
            n = dense.shape[0]
            belief = rng.random(n)
            belief /= belief.sum()
            from riskdesk.decision import apply_factored

            assert apply_factored(belief, tuple(factors)) == pytest.approx(
                belief @ dense, abs=1e-12
            )

    def test_model_with_factored_tables_solves_identically(self):
        rng = np.random.default_rng(18)
        comps = tuple(Variable(f"c{i}", ("fine", "worn")) for i in range(3))
        space = HealthStateSpace(comps)
        n = space.size
        factors = {}
        dense = {}
        for a in ("hold", "mend"):
            fs = []
            for _ in comps:
                m = rng.random((2, 2)) + 0.05
                fs.append(m / m.sum(axis=1, keepdims=True))
            factors[a] = tuple(fs)
            d = fs[0]
            for m in fs[1:]:
                d = np.kron(d, m)
            dense[a] = d
        likelihood = rng.random((n, 3)) + 0.05
        likelihood /= likelihood.sum(axis=1, keepdims=True)
        prior = rng.random(n) + 0.05
        prior /= prior.sum()
        classifier = ClassifierModel.generative(("o0", "o1", "o2"), likelihood, prior)

        top = Variable("top", ("ok", "failed"))
        worst = {
            (s0, s1, s2): (0.0, 1.0) if "worn" in (s0, s1, s2) else (1.0, 0.0)
            for s0 in ("fine", "worn") for s1 in ("fine", "worn") for s2 in ("fine", "worn")
        }
        net = BayesNet(
            list(comps) + [top],
            [Cpt(c.id, (), {(): (0.5, 0.5)}) for c in comps]
            + [Cpt("top", tuple(c.id for c in comps), worst)],
        )
        utilities = UtilityModel(
            {"ok": 0.0, "failed": -9.0}, {"ok": 0.0, "failed": -9.0},
            {"hold": 0.0, "mend": -2.0},
        )

        def build(tables):
            return DecisionModel(
                space, classifier,
                TransitionModel(("hold", "mend"), tables),
                FailureModel(net, "top", tuple(c.id for c in comps)),
                utilities,
            )

        m_factored, m_dense = build(factors), build(dense)
        for obs in ("o0", "o1", "o2"):
            for a in ("hold", "mend"):
                assert expected_utility(m_factored, obs, a) == pytest.approx(
                    expected_utility(m_dense, obs, a), abs=1e-12
                )
            assert solve_single_stage(m_factored, obs)[0] == solve_single_stage(m_dense, obs)[0]

    def test_factored_env_conditioning_rejected(self):
        with pytest.raises(Exception, match="environment"):
            TransitionModel(
                ("a",), {"a": (np.eye(2), np.eye(2))}, env_states=("calm", "storm")
            )


class TestConditionBelief:
    def test_matches_posterior_from_prior(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            model = random_decision_model(rng)
            prior = model.classifier.prior()
            for obs in model.observations:
                a = condition_belief(model, prior, obs)
                b = posterior_health(model, obs)
                assert a == pytest.approx(b, abs=1e-9)

    def test_solve_with_belief_consistent(self):
        model = single_component_model(accuracy=0.9, u_fail_next=-10.0, cost_fix=-3.0)
        action, value, post = solve_with_belief(
            model, model.classifier.prior(), "see_bad"
        )
        expected_action, expected_value = solve_single_stage(model, "see_bad")
        assert (action, value) == (expected_action, pytest.approx(expected_value))
        assert post == pytest.approx(posterior_health(model, "see_bad"))
