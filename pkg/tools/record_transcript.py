#!/usr/bin/env python3
"""Record the operator-console contract transcript.

Drives the scripted session the frontend contract tests replay (three
evidence entries, two commits, one VoI report) against the real service and
captures every request/response pair in order. The fixture lands at
frontend/tests/fixtures/transcript.json; regenerate it after any API change:

    python3 tools/record_transcript.py
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from riskdesk.service import create_app

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "frontend" / "tests" / "fixtures" / "transcript.json"
EXTRA_FIXTURE = ROOT / "frontend" / "tests" / "fixtures" / "transcript_extra.json"
SCENARIO = str(ROOT / "scenarios" / "farm10.json")


def main() -> None:
    import tempfile

    calls: list[dict] = []

    with tempfile.TemporaryDirectory() as td:
        client = TestClient(create_app(data_dir=td))

        def record(method: str, path: str, *, params=None, body=None):
            if method == "GET":
                response = client.get(path, params=params)
            else:
                response = client.post(path, json=body)
            assert response.status_code == 200, f"{method} {path}: {response.text}"
            calls.append(
                {
                    "method": method,
                    "path": path,
                    "params": params,
                    "body": body,
                    "response": response.json(),
                }
            )
            return response.json()

        session = record("POST", "/sessions", body={"scenario": SCENARIO})
        sid = session["session_id"]
        base = f"/sessions/{sid}"

        # session open: hierarchy + default structure posterior
        record("GET", f"{base}/hierarchy")
        record("GET", f"{base}/posterior", params={"structure": "turbine_0"})

        # evidence 1 + refresh, what-if, commit 1 + refresh
        record("POST", f"{base}/evidence", body={"structure": "turbine_0", "obs": "d2"})
        record("GET", f"{base}/hierarchy")
        whatif = record("POST", f"{base}/whatif", body={"structure": "turbine_0"})
        record(
            "POST",
            f"{base}/commit",
            body={"structure": "turbine_0", "action": whatif["recommended"],
                  "expected_step": 0},
        )
        record("GET", f"{base}/posterior", params={"structure": "turbine_0"})
        record("GET", f"{base}/hierarchy")

        # select turbine_1; evidence 2, what-if, commit 2 + refresh
        record("GET", f"{base}/posterior", params={"structure": "turbine_1"})
        record("POST", f"{base}/evidence", body={"structure": "turbine_1", "obs": "d3"})
        record("GET", f"{base}/hierarchy")
        whatif = record("POST", f"{base}/whatif", body={"structure": "turbine_1"})
        record(
            "POST",
            f"{base}/commit",
            body={"structure": "turbine_1", "action": whatif["recommended"],
                  "expected_step": 1},
        )
        record("GET", f"{base}/posterior", params={"structure": "turbine_1"})
        record("GET", f"{base}/hierarchy")

        # select turbine_2; evidence 3 + refresh; VoI report
        record("GET", f"{base}/posterior", params={"structure": "turbine_2"})
        record("POST", f"{base}/evidence", body={"structure": "turbine_2", "obs": "d1"})
        record("GET", f"{base}/hierarchy")
        record("GET", f"{base}/voi", params={"kind": "obs"})

        # the reload surface: log plus the GETs a fresh console issues
        reload_from = len(calls)
        record("GET", f"{base}/log")
        record("GET", f"{base}/posterior", params={"structure": "turbine_0"})
        record("GET", f"{base}/posterior", params={"structure": "turbine_2"})
        record("GET", f"{base}/hierarchy")

    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(
        json.dumps(
            {"session_id": sid, "reload_from": reload_from, "calls": calls}, indent=2
        )
        + "\n"
    )
    print(f"recorded {len(calls)} calls to {FIXTURE} (reload block at {reload_from})")

    EXTRA_FIXTURE.write_text(json.dumps(record_extras(), indent=2) + "\n")
    print(f"recorded extra mini-sessions to {EXTRA_FIXTURE}")


def record_extras() -> dict:
    """Two one-commit mini-sessions: a static system (zero realized cost) and
    the sacrifice demo (commit-the-recommendation golden)."""
    import tempfile

    out: dict[str, dict] = {}
    for name, scenario, structure in (
        ("static", "transfer_demo_neg.json", "asset_0"),
        ("sacrifice", "sacrifice_demo.json", "asset_1"),
    ):
        calls: list[dict] = []
        with tempfile.TemporaryDirectory() as td:
            client = TestClient(create_app(data_dir=td))

            def record(method: str, path: str, *, params=None, body=None):
                response = (
                    client.get(path, params=params)
                    if method == "GET"
                    else client.post(path, json=body)
                )
                assert response.status_code == 200, f"{method} {path}: {response.text}"
                calls.append(
                    {"method": method, "path": path, "params": params, "body": body,
                     "response": response.json()}
                )
                return response.json()

            scenario_path = str(ROOT / "scenarios" / scenario)
            session = record("POST", "/sessions", body={"scenario": scenario_path})
            base = f"/sessions/{session['session_id']}"
            first = session["structures"][0]
            record("GET", f"{base}/hierarchy")
            record("GET", f"{base}/posterior", params={"structure": first})
            whatif = record("POST", f"{base}/whatif", body={"structure": structure})
            record(
                "POST",
                f"{base}/commit",
                body={"structure": structure, "action": whatif["recommended"],
                      "expected_step": 0},
            )
            record("GET", f"{base}/posterior", params={"structure": first})
            record("GET", f"{base}/hierarchy")
        out[name] = {"structure": structure, "calls": calls}
    return out


if __name__ == "__main__":
    main()
