"""HTTP service: session-scoped access to the engine for the operator console.

Every number in a response comes from a direct library call against the
session state; the service adds no arithmetic of its own. Sessions persist as
append-only JSONL event logs (created / evidence / commit) under the data
directory, and replaying a log reconstructs the exact same session: the
simulator streams are keyed by (seed, step), so a restarted service answers
every GET identically.

What-if queries never mutate; only POST /commit advances the world, applying
the chosen action to the named structure and the scenario's first-declared
action to everyone else.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .decision import (
    DecisionModel,
    condition_belief,
    expected_utility_from_belief,
    forecast,
)
from .fault_tree import FAILED
from .hierarchy import availability_kofn_k, kofn_failure_probability
from .pgm import PgmError
from .scenario import (
    Population,
    ScenarioConfig,
    build_decision_model,
    build_population,
    load_scenario,
    state_masks,
)
from .sim import initial_observations, step
from .voi import voi_observation, voi_transfer

DEFAULT_DATA_DIR = "riskdesk_data"


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class SessionState:
    """One operator session: a loaded population plus beliefs and the event log."""

    def __init__(self, session_id: str, config: ScenarioConfig, created_at: str):
        self.id = session_id
        self.config = config
        self.pop: Population = build_population(config)
        self.created_at = created_at
        self.updated_at = created_at
        self.lock = threading.RLock()

        self.component_masks, self.gate_masks = state_masks(config)
        self.beliefs: dict[str, np.ndarray] = {
            sid: self.pop.initial_belief(sid) for sid in config.member_ids()
        }
        self.posted_obs: dict[str, str] = {}
        self.step_index = 0
        self.trajectory: list[dict] = []
        self.events: list[dict] = []

    # --- model access -------------------------------------------------------

    def model(self, structure: str) -> DecisionModel:
        try:
            return self.pop.believed[structure]
        except KeyError:
            raise HTTPException(404, f"unknown structure {structure!r}") from None

    def current_belief(self, structure: str) -> np.ndarray:
        model = self.model(structure)
        belief = self.beliefs[structure]
        obs = self.posted_obs.get(structure)
        if obs is None:
            return belief
        return condition_belief(model, belief, obs)

    # --- mutations (also used during replay) ----------------------------------

    def apply_evidence(self, structure: str, obs: str) -> None:
        model = self.model(structure)
        if obs not in model.observations:
            raise HTTPException(400, f"unknown observation symbol {obs!r}")
        try:
            condition_belief(model, self.beliefs[structure], obs)
        except PgmError as exc:
            raise HTTPException(400, str(exc)) from None
        self.posted_obs[structure] = obs

    def apply_commit(self, structure: str, action: str) -> dict:
        model = self.model(structure)
        if action not in model.actions:
            raise HTTPException(400, f"unknown action {action!r}")
        neutral = self.config.actions[0].id
        actions = {sid: neutral for sid in self.config.member_ids()}
        actions[structure] = action

        posteriors = {sid: self.current_belief(sid) for sid in actions}
        result = step(self.pop.truth, actions)
        for sid in actions:
            self.beliefs[sid] = forecast(self.model(sid), posteriors[sid], actions[sid])
        self.posted_obs.clear()
        self.step_index += 1

        n = len(self.config.member_ids())
        failed_count = sum(1 for f in result.failed.values() if f)
        k = availability_kofn_k(n, self.pop.availability)
        record = {
            "step": result.step,
            "env": result.env_state,
            "structures": {
                sid: {
                    "action": actions[sid],
                    "observation": result.observations[sid],
                    "realized_utility": result.utilities[sid],
                    "failed": result.failed[sid],
                }
                for sid in actions
            },
            "availability": 1.0 - failed_count / n,
            "population_failed": failed_count >= k,
        }
        self.trajectory.append(record)
        return record

    # --- read-only payloads -----------------------------------------------------

    def structure_failure_probability(self, structure: str) -> float:
        belief = self.current_belief(structure)
        top = self.pop.believed[structure].failure.failure_variable
        return float(belief @ self.gate_masks[top])

    def population_failure(self) -> dict:
        members = self.config.member_ids()
        probs = [self.structure_failure_probability(sid) for sid in members]
        k = availability_kofn_k(len(members), self.pop.availability)
        return {
            "k": k,
            "availability_threshold": self.pop.availability,
            "expected_availability": 1.0 - float(np.mean(probs)) if probs else 1.0,
            "failure_probability": kofn_failure_probability(probs, k),
        }

    def posterior_payload(self, structure: str) -> dict:
        model = self.model(structure)
        belief = self.current_belief(structure)
        components = {
            cid: float(belief @ mask) for cid, mask in self.component_masks.items()
        }
        substructures = {
            f"ft_{sub.id}": float(belief @ self.gate_masks[f"ft_{sub.id}"])
            for sub in self.config.structure.substructures
            if f"ft_{sub.id}" in self.gate_masks
        }
        return {
            "structure": structure,
            "step": self.step_index,
            "observation": self.posted_obs.get(structure),
            "belief": {label: float(p) for label, p in zip(model.space.labels, belief)},
            "failure": {
                "components": components,
                "substructures": substructures,
                "structure": self.structure_failure_probability(structure),
                "population": self.population_failure(),
            },
        }

    def hierarchy_payload(self) -> dict:
        h = self.pop.hierarchy
        members = self.config.member_ids()
        struct_probs = {sid: self.structure_failure_probability(sid) for sid in members}

        def node_probability(node_id: str) -> float | None:
            node = h.node(node_id)
            if node.level == "S3":
                return struct_probs.get(node_id)
            if node.level in ("S1", "S2"):
                owner = next((m for m in members if node_id.startswith(m + ".")), None)
                if owner is None:
                    return None
                belief = self.current_belief(owner)
                if node.level == "S1" and node.health_variable in self.component_masks:
                    return float(belief @ self.component_masks[node.health_variable])
                gate = f"ft_{node_id.split('.', 1)[1]}"
                if gate in self.gate_masks:
                    return float(belief @ self.gate_masks[gate])
                return None
            structures = [s.id for s in h.structures_under(node_id)]
            probs = [struct_probs[s] for s in structures if s in struct_probs]
            if not probs:
                return None
            k = availability_kofn_k(len(probs), self.pop.availability)
            return kofn_failure_probability(probs, k)

        def render(node_id: str) -> dict:
            node = h.node(node_id)
            doc: dict[str, Any] = {
                "id": node.id,
                "level": node.level,
                "kind": node.kind,
                "type_tag": node.type_tag,
                "failure_probability": node_probability(node_id),
            }
            if node.level in ("S4", "S5", "S6") and h.structures_under(node_id):
                doc["population"] = self.population_failure() if set(
                    s.id for s in h.structures_under(node_id)
                ) == set(members) else None
            if node.children:
                doc["children"] = [render(c) for c in node.children]
            return doc

        return {"session_id": self.id, "step": self.step_index, "root": render(h.root)}

    def whatif_payload(self, structure: str) -> dict:
        model = self.model(structure)
        belief = self.current_belief(structure)
        top = model.failure.failure_variable
        rows = []
        best_action, best_value = None, -np.inf
        for action in model.actions:
            value = expected_utility_from_belief(model, belief, action)
            ahead = forecast(model, belief, action)
            rows.append(
                {
                    "action": action,
                    "expected_utility": value,
                    "forecast_failure_probability": float(ahead @ self.gate_masks[top]),
                }
            )
            if value > best_value:
                best_action, best_value = action, value
        return {
            "structure": structure,
            "step": self.step_index,
            "actions": rows,
            "recommended": best_action,
        }


class SessionStore:
    """Sessions in memory, backed by append-only event logs for replay."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.jsonl"

    def _append(self, session: SessionState, event: dict) -> None:
        session.events.append(event)
        session.updated_at = event["ts"]
        with self._log_path(session.id).open("a") as fh:
            fh.write(json.dumps(event) + "\n")

    def create(self, scenario: str | Mapping) -> SessionState:
        if isinstance(scenario, str):
            config = load_scenario(scenario)
        else:
            config = load_scenario(dict(scenario))
        session_id = uuid.uuid4().hex
        created_at = _now()
        session = SessionState(session_id, config, created_at)
        with self._lock:
            self._sessions[session_id] = session
        self._append(
            session,
            {"type": "created", "ts": created_at, "session_id": session_id,
             "scenario": config.raw},
        )
        return session

    def get(self, session_id: str) -> SessionState:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        path = self._log_path(session_id)
        if not path.exists():
            raise HTTPException(404, f"unknown session {session_id!r}")
        session = self._replay(session_id, path)
        with self._lock:
            self._sessions.setdefault(session_id, session)
            return self._sessions[session_id]

    def _replay(self, session_id: str, path: Path) -> SessionState:
        events = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        if not events or events[0]["type"] != "created":
            raise HTTPException(500, f"corrupt event log for session {session_id!r}")
        config = load_scenario(events[0]["scenario"])
        session = SessionState(session_id, config, events[0]["ts"])
        session.events.append(events[0])
        for event in events[1:]:
            if event["type"] == "evidence":
                session.apply_evidence(event["structure"], event["obs"])
            elif event["type"] == "commit":
                session.apply_commit(event["structure"], event["action"])
            session.events.append(event)
            session.updated_at = event["ts"]
        return session

    def record_evidence(self, session: SessionState, structure: str, obs: str) -> None:
        self._append(
            session,
            {"type": "evidence", "ts": _now(), "structure": structure, "obs": obs},
        )

    def record_commit(self, session: SessionState, structure: str, action: str) -> None:
        self._append(
            session,
            {"type": "commit", "ts": _now(), "structure": structure, "action": action},
        )


class CreateSessionBody(BaseModel):
    scenario: str | dict


class EvidenceBody(BaseModel):
    structure: str
    obs: str


class WhatIfBody(BaseModel):
    structure: str


class CommitBody(BaseModel):
    structure: str
    action: str
    expected_step: int | None = None


def create_app(default_scenario: str | None = None, data_dir: str | None = None) -> FastAPI:
    root = Path(data_dir or os.environ.get("RISKDESK_DATA_DIR") or DEFAULT_DATA_DIR)
    store = SessionStore(root)
    app = FastAPI(title="riskdesk", version="0.1.0")
    app.state.store = store

    @app.post("/sessions")
    def create_session(body: CreateSessionBody | None = None):
        scenario = body.scenario if body is not None else default_scenario
        if scenario is None:
            raise HTTPException(400, "no scenario given and no default configured")
        try:
            session = store.create(scenario)
        except HTTPException:
            raise
        except Exception as exc:
            raise HTTPException(400, f"could not load scenario: {exc}") from None
        return {"session_id": session.id, "created_at": session.created_at,
                "scenario": session.config.name,
                "structures": session.config.member_ids(),
                "actions": list(session.config.action_ids()),
                "observations": list(session.model(session.config.member_ids()[0]).observations)}

    @app.get("/sessions/{session_id}/hierarchy")
    def get_hierarchy(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.hierarchy_payload()

    @app.post("/sessions/{session_id}/evidence")
    def post_evidence(session_id: str, body: EvidenceBody):
        session = store.get(session_id)
        with session.lock:
            session.apply_evidence(body.structure, body.obs)
            store.record_evidence(session, body.structure, body.obs)
            return session.posterior_payload(body.structure)

    @app.get("/sessions/{session_id}/posterior")
    def get_posterior(session_id: str, structure: str):
        session = store.get(session_id)
        with session.lock:
            return session.posterior_payload(structure)

    @app.post("/sessions/{session_id}/whatif")
    def post_whatif(session_id: str, body: WhatIfBody):
        session = store.get(session_id)
        with session.lock:
            return session.whatif_payload(body.structure)

    @app.post("/sessions/{session_id}/commit")
    def post_commit(session_id: str, body: CommitBody):
        session = store.get(session_id)
        with session.lock:
            if body.expected_step is not None and body.expected_step != session.step_index:
                raise HTTPException(
                    409,
                    f"stale step: session is at {session.step_index}, "
                    f"commit expected {body.expected_step}",
                )
            record = session.apply_commit(body.structure, body.action)
            store.record_commit(session, body.structure, body.action)
            return record

    @app.get("/sessions/{session_id}/voi")
    def get_voi(session_id: str, kind: str, structure: str | None = None,
                trials: int | None = None, seed: int | None = None):
        session = store.get(session_id)
        with session.lock:
            config = session.config
            if kind == "obs":
                sid = structure or config.member_ids()[0]
                report = voi_observation(session.model(sid))
            elif kind == "transfer":
                names = config.voi.get("transfer", {})
                informed_name = names.get("informed", "believed_informed")
                if informed_name not in config.models:
                    raise HTTPException(
                        400, f"scenario has no {informed_name!r} model family for transfer"
                    )
                baseline = build_decision_model(config, names.get("baseline", "believed"))
                informed = build_decision_model(config, informed_name)
                n = trials if trials is not None else int(config.voi.get("trials", 100))
                report = voi_transfer(
                    baseline, informed, config, n, seed if seed is not None else config.seed
                )
            else:
                raise HTTPException(400, f"unknown voi kind {kind!r} (obs or transfer)")
            return report.to_dict()

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return {
                "session_id": session.id,
                "created_at": session.created_at,
                "updated_at": session.updated_at,
                "step": session.step_index,
                "events": session.events,
                "trajectory": session.trajectory,
            }

    return app
