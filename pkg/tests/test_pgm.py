import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import joint_product_oracle, random_binary_net
from riskdesk.pgm import (
    BayesNet,
    Cpt,
    EvidenceError,
    IncompleteAssignmentError,
    InconsistentEvidenceError,
    NetworkValidationError,
    QueryIsEvidenceError,
    StateSpaceTooLargeError,
    Variable,
    enumerate_infer,
    infer,
    joint_probability,
    network_from_dict,
    network_to_dict,
)


@pytest.fixture
def identity_chain():
    """X -> Y -> Z, deterministic identity CPTs, P(X=a) = 0.5."""
    variables = [Variable(v, ("a", "b")) for v in "XYZ"]
    ident = {("a",): (1.0, 0.0), ("b",): (0.0, 1.0)}
    cpts = [
        Cpt("X", (), {(): (0.5, 0.5)}),
        Cpt("Y", ("X",), ident),
        Cpt("Z", ("Y",), ident),
    ]
    return BayesNet(variables, cpts)


class TestJointProbability:
    def test_identity_chain_consistent_assignment(self, identity_chain):
        assert joint_probability(identity_chain, {"X": "a", "Y": "a", "Z": "a"}) == 0.5

    def test_identity_chain_violating_assignment(self, identity_chain):
        assert joint_probability(identity_chain, {"X": "a", "Y": "b", "Z": "a"}) == 0.0

    def test_missing_variable_rejected(self, identity_chain):
        with pytest.raises(IncompleteAssignmentError):
            joint_probability(identity_chain, {"X": "a", "Y": "a"})

    def test_unknown_state_rejected(self, identity_chain):
        with pytest.raises(EvidenceError):
            joint_probability(identity_chain, {"X": "a", "Y": "a", "Z": "c"})

    def test_random_net_matches_product_oracle(self):
        rng = np.random.default_rng(501)
        net = random_binary_net(rng, 5)
        for _ in range(20):
            assignment = {v: ("no", "yes")[rng.integers(0, 2)] for v in net.variables}
            assert joint_probability(net, assignment) == pytest.approx(
                joint_product_oracle(net, assignment), abs=1e-12
            )

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=30, deadline=None)
    def test_marginalization_consistency(self, seed):
        rng = np.random.default_rng(seed)
        net = random_binary_net(rng, int(rng.integers(2, 8)))
        total = 0.0
        for combo in itertools.product(("no", "yes"), repeat=len(net.variables)):
            total += joint_probability(net, dict(zip(net.variables, combo)))
        assert total == pytest.approx(1.0, abs=1e-6)


class TestInfer:
    def test_determinism_propagates_backwards(self, identity_chain):
        assert infer(identity_chain, {"Z": "a"}, "X").distribution == (1.0, 0.0)

    def test_prior_marginal(self, identity_chain):
        assert infer(identity_chain, {}, "X").distribution == pytest.approx((0.5, 0.5))

    def test_query_in_evidence_rejected(self, identity_chain):
        with pytest.raises(QueryIsEvidenceError):
            infer(identity_chain, {"X": "a"}, "X")

    def test_inconsistent_evidence(self):
        x = Variable("X", ("a", "b"))
        y = Variable("Y", ("a", "b"))
        cpts = [
            Cpt("X", (), {(): (1.0, 0.0)}),
            Cpt("Y", ("X",), {("a",): (1.0, 0.0), ("b",): (0.0, 1.0)}),
        ]
        net = BayesNet([x, y], cpts)
        with pytest.raises(InconsistentEvidenceError):
            infer(net, {"Y": "b"}, "X")
        with pytest.raises(InconsistentEvidenceError):
            enumerate_infer(net, {"Y": "b"}, "X")

    def test_matches_enumeration_on_random_nets(self):
        rng = np.random.default_rng(77)
        for _ in range(150):
            net = random_binary_net(rng, int(rng.integers(3, 11)))
            names = list(net.variables)
            rng.shuffle(names)
            query, ev_vars = names[0], names[1 : 1 + int(rng.integers(0, 3))]
            evidence = {v: ("no", "yes")[rng.integers(0, 2)] for v in ev_vars}
            try:
                expected = enumerate_infer(net, evidence, query)
            except InconsistentEvidenceError:
                with pytest.raises(InconsistentEvidenceError):
                    infer(net, evidence, query)
                continue
            got = infer(net, evidence, query)
            assert got.distribution == pytest.approx(expected.distribution, abs=1e-9)
            assert sum(got.distribution) == pytest.approx(1.0, abs=1e-9)

    def test_pure_function_of_inputs(self, identity_chain):
        a = infer(identity_chain, {"Z": "a"}, "Y")
        b = infer(identity_chain, {"Z": "a"}, "Y")
        assert a == b


class TestEnumerateInfer:
    def test_matches_infer_on_chain(self, identity_chain):
        for evidence, query in (({"Z": "a"}, "X"), ({}, "X"), ({"X": "b"}, "Z")):
            assert enumerate_infer(identity_chain, evidence, query) == infer(
                identity_chain, evidence, query
            )

    def test_single_variable_prior(self):
        net = BayesNet([Variable("X", ("a", "b"))], [Cpt("X", (), {(): (0.3, 0.7)})])
        assert enumerate_infer(net, {}, "X").distribution == pytest.approx((0.3, 0.7))

    def test_cap_enforced(self, identity_chain):
        with pytest.raises(StateSpaceTooLargeError):
            enumerate_infer(identity_chain, {}, "X", cap=4)


class TestValidation:
    def test_row_sum_rejected_not_renormalized(self):
        with pytest.raises(NetworkValidationError):
            Cpt("X", (), {(): (0.5, 0.6)})

    def test_negative_probability_rejected(self):
        with pytest.raises(NetworkValidationError):
            Cpt("X", (), {(): (-0.1, 1.1)})

    def test_cycle_rejected(self):
        x = Variable("X", ("a", "b"))
        y = Variable("Y", ("a", "b"))
        ident = {("a",): (1.0, 0.0), ("b",): (0.0, 1.0)}
        with pytest.raises(NetworkValidationError, match="cycle"):
            BayesNet([x, y], [Cpt("X", ("Y",), ident), Cpt("Y", ("X",), ident)])

    def test_missing_cpt_rejected(self):
        with pytest.raises(NetworkValidationError):
            BayesNet([Variable("X", ("a", "b"))], [])

    def test_unknown_parent_rejected(self):
        with pytest.raises(NetworkValidationError):
            BayesNet(
                [Variable("X", ("a", "b"))],
                [Cpt("X", ("Q",), {("a",): (1.0, 0.0), ("b",): (0.0, 1.0)})],
            )

    def test_incomplete_table_rejected(self):
        x = Variable("X", ("a", "b"))
        y = Variable("Y", ("a", "b"))
        with pytest.raises(NetworkValidationError, match="rows"):
            BayesNet(
                [x, y],
                [Cpt("X", (), {(): (0.5, 0.5)}), Cpt("Y", ("X",), {("a",): (1.0, 0.0)})],
            )

    def test_one_state_variable_rejected(self):
        with pytest.raises(NetworkValidationError):
            Variable("X", ("only",))


class TestInterchange:
    def test_round_trip_preserves_inference(self):
        rng = np.random.default_rng(9)
        net = random_binary_net(rng, 6)
        clone = network_from_dict(network_to_dict(net))
        assert network_to_dict(clone) == network_to_dict(net)
        post_a = infer(net, {"x01": "yes"}, "x04")
        post_b = infer(clone, {"x01": "yes"}, "x04")
        assert post_a == post_b

    def test_malformed_document_rejected(self):
        with pytest.raises(NetworkValidationError):
            network_from_dict({"variables": [{"id": "X"}], "cpts": []})
