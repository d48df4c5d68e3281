#!/usr/bin/env python3
"""Regenerate the golden files under tests/golden/.

Run from the repository root after an intentional behaviour change:

    python3 tools/make_golden.py

Every golden is produced by the library itself; the point of the files is to
pin determinism and catch accidental drift, not to re-derive the numbers.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from click.testing import CliRunner

from riskdesk.cli import main as cli_main
from riskdesk.decision import rolling_horizon
from riskdesk.scenario import build_decision_model, generate_population, initial_state_index, load_scenario
from riskdesk.sim import TruthFeed, hierarchy_digest, run_experiment
from riskdesk.voi import voi_failure_data, voi_transfer

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"


def rolling_trajectory_doc(config_path: Path) -> dict:
    import numpy as np

    config = load_scenario(config_path)
    model = build_decision_model(config, "believed")
    _, truth = generate_population(config)
    feed = TruthFeed(truth, config.horizon)
    init = np.zeros(model.space.size)
    init[initial_state_index(config)] = 1.0
    steps = rolling_horizon(model, init, config.horizon, feed)
    return {
        "scenario": config.name,
        "seed": config.seed,
        "steps": [
            {
                "obs": s.obs,
                "action": s.action,
                "realized_utility": s.realized_utility,
                "belief": list(s.belief),
                "meu": s.meu,
            }
            for s in steps
        ],
    }


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)

    farm = load_scenario(ROOT / "scenarios" / "farm10.json")
    hierarchy, _ = generate_population(farm, seed=42)
    (GOLDEN / "hierarchy_farm10_seed42.sha256").write_text(hierarchy_digest(hierarchy) + "\n")

    log, summary = run_experiment(farm, seed=7)
    (GOLDEN / "farm10_seed7_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    digest = hashlib.sha256(log.to_jsonl().encode()).hexdigest()
    (GOLDEN / "farm10_seed7_trajectory.sha256").write_text(digest + "\n")

    doc = rolling_trajectory_doc(ROOT / "tests" / "data" / "rolling3.json")
    (GOLDEN / "rolling3_trajectory.json").write_text(
        json.dumps(doc, indent=2) + "\n"
    )

    report = voi_failure_data(ROOT / "scenarios" / "sacrifice_demo.json", "asset_0", 1, 23)
    (GOLDEN / "sacrifice_trial1.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    )

    pos = load_scenario(ROOT / "scenarios" / "transfer_demo_pos.json")
    baseline = build_decision_model(pos, "believed")
    informed = build_decision_model(pos, "believed_informed")
    transfer = voi_transfer(baseline, informed, pos, trials=50, seed=11)
    (GOLDEN / "transfer_pos_trials50.json").write_text(
        json.dumps(transfer.to_dict(), indent=2, sort_keys=True) + "\n"
    )

    runner = CliRunner()
    result = runner.invoke(
        cli_main, ["compile", str(ROOT / "scenarios" / "kofn_demo.ft")]
    )
    if result.exit_code != 0:
        raise SystemExit(f"compile failed: {result.output}")
    (GOLDEN / "kofn_demo_network.json").write_text(result.output)

    print(f"wrote goldens to {GOLDEN}")


if __name__ == "__main__":
    main()
