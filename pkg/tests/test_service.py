import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from riskdesk.decision import condition_belief, expected_utility_from_belief, forecast
from riskdesk.scenario import (
    build_population,
    initial_state_index,
    load_scenario,
    state_masks,
)
from riskdesk.service import create_app
from riskdesk.voi import voi_observation

SCENARIOS = Path(__file__).parent.parent / "scenarios"
DATA = Path(__file__).parent / "data"


@pytest.fixture
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "sessions")
    with TestClient(app) as c:
        yield c


def make_session(client, scenario=SCENARIOS / "farm10.json"):
    response = client.post("/sessions", json={"scenario": str(scenario)})
    assert response.status_code == 200
    return response.json()["session_id"]


class TestSessions:
    def test_create_returns_id_and_domains(self, client):
        response = client.post("/sessions", json={"scenario": str(SCENARIOS / "farm10.json")})
        body = response.json()
        assert body["scenario"] == "farm10"
        assert body["structures"][0] == "turbine_0"
        assert body["observations"] == ["d0", "d1", "d2", "d3", "d4"]

    def test_inline_scenario_document(self, client):
        doc = json.loads((DATA / "rolling3.json").read_text())
        response = client.post("/sessions", json={"scenario": doc})
        assert response.status_code == 200

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/log").status_code == 404

    def test_bad_scenario_400(self, client):
        response = client.post("/sessions", json={"scenario": {"name": "broken"}})
        assert response.status_code == 400


class TestPosterior:
    def test_prior_before_any_evidence(self, client):
        sid = make_session(client)
        config = load_scenario(SCENARIOS / "farm10.json")
        pop = build_population(config)
        expected = pop.initial_belief("turbine_0")
        body = client.get(
            f"/sessions/{sid}/posterior", params={"structure": "turbine_0"}
        ).json()
        assert list(body["belief"].values()) == pytest.approx(list(expected))
        assert body["observation"] is None

    def test_evidence_post_equals_direct_library_call(self, client):
        sid = make_session(client)
        config = load_scenario(SCENARIOS / "farm10.json")
        pop = build_population(config)
        model = pop.believed["turbine_0"]
        belief = pop.initial_belief("turbine_0")

        body = client.post(
            f"/sessions/{sid}/evidence", json={"structure": "turbine_0", "obs": "d1"}
        ).json()
        expected = condition_belief(model, belief, "d1")
        assert list(body["belief"].values()) == list(map(float, expected))

        masks, gates = state_masks(config)
        assert body["failure"]["structure"] == float(expected @ gates["F"])
        assert body["failure"]["components"]["blade_a"] == float(expected @ masks["blade_a"])

    def test_invalid_symbol_400(self, client):
        sid = make_session(client)
        response = client.post(
            f"/sessions/{sid}/evidence", json={"structure": "turbine_0", "obs": "d99"}
        )
        assert response.status_code == 400

    def test_unknown_structure_404(self, client):
        sid = make_session(client)
        response = client.get(f"/sessions/{sid}/posterior", params={"structure": "ghost"})
        assert response.status_code == 404


class TestWhatIf:
    def test_values_equal_direct_engine_calls(self, client):
        sid = make_session(client)
        client.post(f"/sessions/{sid}/evidence", json={"structure": "turbine_3", "obs": "d2"})
        body = client.post(f"/sessions/{sid}/whatif", json={"structure": "turbine_3"}).json()

        config = load_scenario(SCENARIOS / "farm10.json")
        pop = build_population(config)
        model = pop.believed["turbine_3"]
        belief = condition_belief(model, pop.initial_belief("turbine_3"), "d2")
        _, gates = state_masks(config)
        for row in body["actions"]:
            expected_eu = expected_utility_from_belief(model, belief, row["action"])
            assert row["expected_utility"] == expected_eu
            ahead = forecast(model, belief, row["action"])
            assert row["forecast_failure_probability"] == float(ahead @ gates["F"])
        best = max(body["actions"], key=lambda r: r["expected_utility"])
        assert body["recommended"] == best["action"]

    def test_exploring_twice_is_stateless(self, client):
        sid = make_session(client)
        a = client.post(f"/sessions/{sid}/whatif", json={"structure": "turbine_0"}).json()
        b = client.post(f"/sessions/{sid}/whatif", json={"structure": "turbine_0"}).json()
        assert a == b


class TestCommit:
    def test_advances_one_step_and_reports_outcome(self, client):
        sid = make_session(client)
        body = client.post(
            f"/sessions/{sid}/commit",
            json={"structure": "turbine_0", "action": "repair", "expected_step": 0},
        ).json()
        assert body["step"] == 0
        assert body["structures"]["turbine_0"]["action"] == "repair"
        assert body["structures"]["turbine_1"]["action"] == "do_nothing"
        assert 0.0 <= body["availability"] <= 1.0
        log = client.get(f"/sessions/{sid}/log").json()
        assert log["step"] == 1
        assert len(log["trajectory"]) == 1

    def test_stale_step_conflict(self, client):
        sid = make_session(client)
        client.post(f"/sessions/{sid}/commit", json={"structure": "turbine_0", "action": "repair"})
        response = client.post(
            f"/sessions/{sid}/commit",
            json={"structure": "turbine_0", "action": "repair", "expected_step": 0},
        )
        assert response.status_code == 409

    def test_unknown_action_400(self, client):
        sid = make_session(client)
        response = client.post(
            f"/sessions/{sid}/commit", json={"structure": "turbine_0", "action": "paint"}
        )
        assert response.status_code == 400


class TestHierarchyEndpoint:
    def test_probabilities_trace_to_library_calls(self, client):
        sid = make_session(client)
        client.post(f"/sessions/{sid}/evidence", json={"structure": "turbine_0", "obs": "d3"})
        body = client.get(f"/sessions/{sid}/hierarchy").json()

        config = load_scenario(SCENARIOS / "farm10.json")
        pop = build_population(config)
        model = pop.believed["turbine_0"]
        belief = condition_belief(model, pop.initial_belief("turbine_0"), "d3")
        masks, gates = state_masks(config)

        def find(node, node_id):
            if node["id"] == node_id:
                return node
            for child in node.get("children", ()):
                hit = find(child, node_id)
                if hit:
                    return hit
            return None

        root = body["root"]
        assert root["level"] == "S6"
        s3 = find(root, "turbine_0")
        assert s3["failure_probability"] == float(belief @ gates["F"])
        s1 = find(root, "turbine_0.blade_a")
        assert s1["failure_probability"] == float(belief @ masks["blade_a"])
        s2 = find(root, "turbine_0.rotor")
        assert s2["failure_probability"] == float(belief @ gates["ft_rotor"])


class TestVoiEndpoint:
    def test_observation_voi_matches_library(self, client):
        sid = make_session(client)
        body = client.get(f"/sessions/{sid}/voi", params={"kind": "obs"}).json()
        config = load_scenario(SCENARIOS / "farm10.json")
        pop = build_population(config)
        expected = voi_observation(pop.believed["turbine_0"]).to_dict()
        assert body == expected

    def test_transfer_requires_model_family(self, client):
        sid = make_session(client)
        response = client.get(f"/sessions/{sid}/voi", params={"kind": "transfer"})
        assert response.status_code == 400

    def test_transfer_on_transfer_scenario(self, tmp_path):
        app = create_app(data_dir=tmp_path / "s")
        with TestClient(app) as client:
            sid = make_session(client, SCENARIOS / "transfer_demo_pos.json")
            body = client.get(
                f"/sessions/{sid}/voi",
                params={"kind": "transfer", "trials": 5, "seed": 2},
            ).json()
            assert body["kind"] == "transfer" and body["n"] == 5

    def test_unknown_kind_400(self, client):
        sid = make_session(client)
        assert client.get(f"/sessions/{sid}/voi", params={"kind": "teleport"}).status_code == 400


class TestReplay:
    def test_restart_reproduces_get_responses(self, tmp_path):
        data_dir = tmp_path / "sessions"
        app = create_app(data_dir=data_dir)
        with TestClient(app) as client:
            sid = make_session(client)
            client.post(f"/sessions/{sid}/evidence", json={"structure": "turbine_1", "obs": "d2"})
            client.post(f"/sessions/{sid}/commit", json={"structure": "turbine_1", "action": "repair"})
            client.post(f"/sessions/{sid}/evidence", json={"structure": "turbine_2", "obs": "d4"})
            before_posterior = client.get(
                f"/sessions/{sid}/posterior", params={"structure": "turbine_2"}
            ).json()
            before_hierarchy = client.get(f"/sessions/{sid}/hierarchy").json()
            before_log = client.get(f"/sessions/{sid}/log").json()

        fresh = create_app(data_dir=data_dir)
        with TestClient(fresh) as client2:
            after_posterior = client2.get(
                f"/sessions/{sid}/posterior", params={"structure": "turbine_2"}
            ).json()
            after_hierarchy = client2.get(f"/sessions/{sid}/hierarchy").json()
            after_log = client2.get(f"/sessions/{sid}/log").json()

        assert before_posterior == after_posterior
        assert before_hierarchy == after_hierarchy
        assert before_log == after_log
