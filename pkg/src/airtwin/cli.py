"""Command-line interface.

Each subcommand maps onto one module's entry operation; exit code 0 means
no failures. Errors print a single machine-parseable line to stderr:
``error: <kind>: <message>``.
"""

import csv
import json
import sys
from pathlib import Path

import click

from . import engine as eng
from .airspace import load_scenario
from .assurance import evaluate, export, load_case, validate_case
from .bench import default_sweep, provider_from_name, run_benchmark
from .config import engine_config, load_config
from .metrics import MetricStore, distribution_report, profiles_from_scenario
from .perf import load_model
from .quality import quality_scan


class CliError(click.ClickException):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind

    def show(self, file=None):
        print(f"error: {self.kind}: {self.message}", file=file or sys.stderr)


def _load_models(paths) -> eng.ModelSet:
    models = eng.ModelSet()
    for p in paths:
        models.add(load_model(p))
    return models


def _write_trajectory(traj: eng.Trajectory, out) -> None:
    """JSON-lines export: one blip per line (docs/formats.md)."""
    for b in traj.blips:
        out.write(json.dumps({
            "callsign": b.callsign, "time": b.time, "lat": b.lat, "lon": b.lon, "fl": b.fl,
            "ground_speed": b.ground_speed, "ground_track": b.ground_track,
            "selected_fl": b.selected_fl, "source": traj.source,
        }, sort_keys=True) + "\n")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML configuration file (env vars AIRTWIN_* override it).")
@click.pass_context
def main(ctx, config_path):
    """Probabilistic digital twin of en-route airspace: replay, prediction,
    validation, data quality, scenario benchmarks and assurance cases."""
    ctx.obj = load_config(config_path)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--callsign", required=True)
@click.option("--out", type=click.Path(), default=None, help="JSONL output (default stdout).")
@click.pass_obj
def replay(cfg, scenario_path, callsign, out):
    """Replay recorded radar for one flight."""
    try:
        scenario = load_scenario(scenario_path)
        traj = eng.replay(scenario, callsign)
    except Exception as exc:
        raise CliError("replay", str(exc))
    with (open(out, "w", encoding="utf-8") if out else sys.stdout) as fh:
        _write_trajectory(traj, fh)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="Performance model JSON (repeatable).")
@click.option("--callsign", required=True)
@click.option("--from", "from_time", type=int, required=True, help="Start time (s).")
@click.option("--horizon", type=int, required=True, help="Look-ahead horizon (s).")
@click.option("--mode", type=click.Choice(eng.PREDICTION_MODES), default="mean_mode")
@click.option("--n-ensemble", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None)
@click.pass_obj
def predict(cfg, scenario_path, model_paths, callsign, from_time, horizon, mode,
            n_ensemble, seed, out):
    """Predict a trajectory (or ensemble) from the replay state."""
    try:
        scenario = load_scenario(scenario_path)
        models = _load_models(model_paths)
        result = eng.predict(scenario, callsign, from_time, horizon, mode, models,
                             n_ensemble=n_ensemble, seed=seed, config=engine_config(cfg))
    except Exception as exc:
        raise CliError("predict", str(exc))
    with (open(out, "w", encoding="utf-8") if out else sys.stdout) as fh:
        if isinstance(result, eng.TrajectoryEnsemble):
            for member in result.members:
                _write_trajectory(member, fh)
        else:
            _write_trajectory(result, fh)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True, help="Distribution table CSV.")
@click.option("--metrics-out", type=click.Path(), default=None,
              help="Also write the MetricResult store (CSV or JSON by extension).")
@click.option("--min-profiles", type=int, default=None,
              help="Population floor (default from config).")
@click.option("--seed", type=int, default=None)
@click.pass_obj
def validate(cfg, scenario_path, model_path, out, metrics_out, min_profiles, seed):
    """Distributional fidelity report: replayed descents vs the model."""
    try:
        scenario = load_scenario(scenario_path)
        model = load_model(model_path)
        vcfg = cfg.get("validate", {})
        floor = min_profiles if min_profiles is not None else int(vcfg.get("min_profiles", 30))
        seed = seed if seed is not None else int(vcfg.get("seed", 0))
        profiles = profiles_from_scenario(scenario, model)
        rows, metric_results = distribution_report(
            model, profiles, seed=seed, min_population=floor, config=engine_config(cfg)
        )
    except Exception as exc:
        raise CliError("validate", str(exc))
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["measure", "transition", "ks_distance",
                                                "wasserstein_distance", "units",
                                                "n_test", "n_generated"])
        writer.writeheader()
        writer.writerows(rows)
    if metrics_out:
        store = MetricStore(metric_results)
        if metrics_out.endswith(".csv"):
            store.save_csv(metrics_out)
        else:
            store.save_json(metrics_out)
    click.echo(f"wrote {len(rows)} distribution rows to {out}")


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="QualityReport JSON.")
@click.pass_obj
def quality(cfg, scenario_path, out):
    """Run the five data-quality dimension checks."""
    try:
        scenario = load_scenario(scenario_path)
        qcfg = cfg.get("quality", {})
        report = quality_scan(
            scenario,
            freshness_threshold_s=int(qcfg.get("freshness_threshold_s", 6)),
            consistency_tolerance_fl=float(qcfg.get("consistency_tolerance_fl", 10.0)),
        )
    except Exception as exc:
        raise CliError("quality", str(exc))
    text = report.to_json(out)
    if not out:
        click.echo(text, nl=False)
    for f in report.findings:
        click.echo(f"{f.dimension}: {'pass' if f.passed else 'FAIL'}"
                   + (f" ({len(f.offending)} records)" if not f.passed else ""))
    if not report.passed():
        raise CliError("quality", "one or more data-quality dimensions failed")


@main.command()
@click.option("--provider", default="stub-oracle",
              help="stub-oracle, stub-adversarial or http (env-configured).")
@click.option("--sweep", default="default", help="Sweep name (only 'default' ships).")
@click.option("--sectors", type=int, default=None)
@click.option("--max-feedback", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None, help="Results table CSV.")
@click.pass_obj
def bench(cfg, provider, sweep, sectors, max_feedback, seed, out):
    """Run the scenario-generation benchmark sweep."""
    try:
        if sweep != "default":
            raise ValueError(f"unknown sweep {sweep!r}")
        bcfg = cfg.get("bench", {})
        n_sectors = sectors if sectors is not None else int(bcfg.get("n_sectors", 10))
        rounds = max_feedback if max_feedback is not None else int(bcfg.get("max_feedback", 2))
        prov = provider_from_name(provider, seed)
        results = run_benchmark(prov, default_sweep(), n_sectors=n_sectors,
                                max_feedback=rounds, seed=seed)
    except Exception as exc:
        raise CliError("bench", str(exc))
    for row in results.rows():
        click.echo(json.dumps(row, sort_keys=True))
    if out:
        results.save_csv(out)
    rate = results.overall_pass_rate()
    click.echo(f"overall pass rate: {rate:.1%}")
    if rate < 1.0:
        raise CliError("bench", f"pass rate {rate:.3f} below the 100% threshold")


@main.command()
@click.option("--case", "case_path", required=True, type=click.Path(exists=True))
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["markdown", "dot", "json"]),
              default="markdown")
@click.pass_obj
def assure(cfg, case_path, metrics_path, out, fmt):
    """Evaluate an assurance case against computed metrics.

    Exit code 0 only when the root goal is supported.
    """
    try:
        case = load_case(case_path)
        violations = validate_case(case)
        if violations:
            raise ValueError("; ".join(violations))
        store = MetricStore.load(metrics_path)
        status = evaluate(case, store)
        rendered = export(case, status, fmt)
    except Exception as exc:
        raise CliError("assure", str(exc))
    if out:
        Path(out).write_text(rendered, encoding="utf-8")
    else:
        click.echo(rendered, nl=False)
    root = status.root_status(case)
    click.echo(f"root {case.root}: {root}", err=True)
    if root != "supported":
        raise CliError("assure", f"root status is {root}, not supported")


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve(cfg, host, port):
    """Run the agent-facing HTTP service."""
    try:
        import uvicorn

        from .service import create_app
        svc = cfg.get("service", {})
        app = create_app(cfg)
        uvicorn.run(app, host=host or svc.get("host", "127.0.0.1"),
                    port=port or int(svc.get("port", 8080)))
    except Exception as exc:
        raise CliError("serve", str(exc))


if __name__ == "__main__":
    main()
