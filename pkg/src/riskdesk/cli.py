"""Command-line front door.

Subcommands: `compile` (fault-tree DSL to a network file), `decide` (MEU
action per structure from posted observations), `simulate` (full scenario
run, trajectory + summary files), `voi` (observation / transfer / sacrifice
reports) and `serve` (the HTTP service). Output is human text by default;
`--format records` switches to stable line-delimited key=value records.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import fault_tree as ft
from . import voi as voi_mod
from .decision import solve_single_stage
from .pgm import Variable, network_to_dict
from .scenario import build_decision_model, build_population, load_scenario
from .sim import run_experiment, save_summary


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _records_line(**fields) -> str:
    return " ".join(f"{k}={v}" for k, v in fields.items())


@click.group()
def main() -> None:
    """Risk-informed maintenance decisions for populations of structures."""


@main.command("compile")
@click.argument("tree_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the network file here instead of stdout.")
@click.option("--states", default="ok,failed",
              help="State labels assumed for unbound health variables.")
def compile_cmd(tree_file: str, out: str | None, states: str) -> None:
    """Compile a fault-tree DSL file into a Bayesian-network file.

    Health variables referenced by the tree's bindings are declared with the
    --states labels and uniform priors, so the output is a self-contained
    network document."""
    try:
        tree = ft.parse_fault_tree(Path(tree_file).read_text())
        labels = tuple(s.strip() for s in states.split(","))
        variables = {b.variable for b in tree.bindings.values()}
        health = [Variable(v, labels) for v in sorted(variables)]
        fragment = ft.compile_to_bn(tree, health_variables=health)
        from .pgm import Cpt

        priors = [Cpt(v.id, (), {(): tuple(1.0 / v.card for _ in v.states)}) for v in health]
        net = fragment.to_net(health, priors)
    except (ft.FaultTreeError, Exception) as exc:
        if isinstance(exc, (ft.FaultTreeError, OSError)):
            _fail(str(exc))
        raise
    doc = json.dumps(network_to_dict(net), indent=2) + "\n"
    if out:
        Path(out).write_text(doc)
        click.echo(f"wrote {out}")
    else:
        click.echo(doc, nl=False)


@main.command("decide")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--obs", "obs_pairs", multiple=True, metavar="STRUCTURE=SYMBOL",
              help="Observation per structure; repeatable.")
@click.option("--format", "fmt", type=click.Choice(["human", "records"]), default="human")
def decide_cmd(scenario_file: str, obs_pairs: tuple[str, ...], fmt: str) -> None:
    """Print the maximum-expected-utility action per observed structure."""
    try:
        config = load_scenario(scenario_file)
        members = config.member_ids()
        assignments = []
        for pair in obs_pairs:
            if "=" not in pair:
                raise ValueError(f"--obs must look like structure=symbol, got {pair!r}")
            structure, symbol = pair.split("=", 1)
            if structure not in members:
                raise ValueError(f"unknown structure {structure!r}")
            assignments.append((structure, symbol))
        if not assignments:
            raise ValueError("no observations given (use --obs STRUCTURE=SYMBOL)")
        rows = []
        for structure, symbol in assignments:
            model = build_decision_model(config, "believed", structure)
            action, meu = solve_single_stage(model, symbol)
            rows.append((structure, action, meu))
    except Exception as exc:
        _fail(str(exc))
    for structure, action, meu in rows:
        if fmt == "records":
            click.echo(_records_line(structure=structure, action=action, meu=meu))
        else:
            click.echo(f"{structure}: {action} (expected utility {meu:.6g})")


@main.command("simulate")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", type=click.Path(file_okay=False), default=".",
              help="Directory for trajectory.jsonl and summary.json.")
@click.option("--format", "fmt", type=click.Choice(["human", "records"]), default="human")
@click.option("--policy", default="meu",
              help='"meu" or a constant action id (baseline run).')
def simulate_cmd(scenario_file: str, seed: int | None, out: str, fmt: str, policy: str) -> None:
    """Run a scenario against the ground-truth simulator and write the log."""
    try:
        config = load_scenario(scenario_file)
        log, summary = run_experiment(config, seed=seed, policy=policy)
    except Exception as exc:
        _fail(str(exc))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.save(out_dir / "trajectory.jsonl")
    save_summary(summary, out_dir / "summary.json")
    if fmt == "records":
        click.echo(_records_line(**summary))
    else:
        click.echo(f"{summary['scenario']}: {summary['structures']} structures, "
                   f"horizon {summary['horizon']}, total utility {summary['total_utility']:.6g}, "
                   f"availability violations {summary['availability_violations']}")
        click.echo(f"wrote {out_dir / 'trajectory.jsonl'} and {out_dir / 'summary.json'}")


@main.command("voi")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["obs", "transfer", "sacrifice"]), required=True)
@click.option("--seed", type=int, default=None, help="Monte Carlo master seed.")
@click.option("--trials", type=int, default=None, help="Monte Carlo trials.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for the report file.")
@click.option("--format", "fmt", type=click.Choice(["human", "records"]), default="human")
def voi_cmd(scenario_file: str, kind: str, seed: int | None, trials: int | None,
            out: str | None, fmt: str) -> None:
    """Value-of-information reports for a scenario."""
    try:
        config = load_scenario(scenario_file)
        seed = config.seed if seed is None else seed
        trials = trials if trials is not None else int(config.voi.get("trials", 100))
        if kind == "obs":
            report = voi_mod.voi_observation(build_decision_model(config, "believed"))
        elif kind == "transfer":
            names = config.voi.get("transfer", {})
            baseline = build_decision_model(config, names.get("baseline", "believed"))
            informed = build_decision_model(config, names.get("informed", "believed_informed"))
            report = voi_mod.voi_transfer(baseline, informed, config, trials, seed)
        else:
            sac = config.voi.get("sacrifice", {})
            member = sac.get("member")
            if not member:
                raise ValueError("scenario has no voi.sacrifice.member entry")
            report = voi_mod.voi_failure_data(config, member, trials, seed)
    except Exception as exc:
        _fail(str(exc))
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.save(out_dir / f"voi_{kind}.json")
    payload = report.to_dict()
    if fmt == "records":
        click.echo(_records_line(**payload))
    else:
        line = f"{payload['kind']} value {payload['value']:.6g} " \
               f"(baseline {payload['baseline']:.6g}, informed {payload['informed']:.6g}"
        if payload["stderr"] is not None:
            line += f", n {payload['n']}, stderr {payload['stderr']:.6g}"
        click.echo(line + ")")


@main.command("serve")
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8350)
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Session storage root (default $RISKDESK_DATA_DIR or ./riskdesk_data).")
def serve_cmd(scenario_file: str | None, host: str, port: int, data_dir: str | None) -> None:
    """Run the HTTP service (see docs/formats.md for the API)."""
    import uvicorn

    from .service import create_app

    app = create_app(default_scenario=scenario_file, data_dir=data_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        _fail(f"could not bind {host}:{port}: {exc}")


if __name__ == "__main__":
    main()
