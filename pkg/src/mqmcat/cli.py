"""Command-line entry points: serve the API, move TM data, run evaluations."""
from __future__ import annotations

import json
import sys
import tempfile

import click

from .config import ConfigError, ProviderConfig, build_provider, load_config, retry_policy_from
from .evaluation.harness import (
    Condition,
    all_pairwise_comparisons,
    build_report,
    compare_runs,
    load_dataset,
    load_run_dir,
    run_condition,
    write_run_dir,
)
from .tm import open_store


@click.group()
def cli() -> None:
    """Human-AI collaborative translation workbench."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def serve(config_path: str) -> None:
    """Run the workbench HTTP API."""
    from .api import BindFailure, serve as run_server

    try:
        run_server(load_config(config_path))
    except (ConfigError, BindFailure) as exc:
        raise click.ClickException(str(exc)) from exc


@cli.group()
def tm() -> None:
    """Translation memory maintenance."""


@tm.command("import")
@click.option("--store", required=True, type=click.Path(dir_okay=False))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
def tm_import(store: str, input_path: str) -> None:
    """Merge entries from a JSONL file into a store."""
    try:
        count = open_store(store).import_from(input_path)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"imported {count} entries into {store}")


@tm.command("export")
@click.option("--store", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
def tm_export(store: str, output_path: str) -> None:
    """Write the store's current entries to a JSONL file."""
    try:
        count = open_store(store).export_to(output_path)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"exported {count} entries to {output_path}")


@cli.group()
def session() -> None:
    """Session log access."""


@session.command("export")
@click.argument("session_id")
@click.option("--sessions-dir", default="sessions", type=click.Path(file_okay=False))
@click.option("--output", "output_path", default="-", help="File path or - for stdout.")
def session_export(session_id: str, sessions_dir: str, output_path: str) -> None:
    """Dump one session's event log as JSON lines."""
    from .session import SessionStore, UnknownSession

    store = SessionStore(sessions_dir)
    try:
        loaded = store.load(session_id)
    except UnknownSession as exc:
        raise click.ClickException(str(exc)) from exc
    lines = [json.dumps(e.to_dict(), ensure_ascii=False, sort_keys=True) for e in loaded.events]
    text = "\n".join(lines) + "\n"
    if output_path == "-":
        sys.stdout.write(text)
    else:
        with open(output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {len(lines)} events to {output_path}")


def _provider_config_from(path: str | None) -> ProviderConfig:
    if path is None:
        return ProviderConfig(kind="mock")
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("provider config root must be a JSON object")
    return ProviderConfig.from_dict(data.get("provider", data))


@cli.group("eval")
def eval_group() -> None:
    """Agent-only evaluation protocol."""


@eval_group.command("run")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--condition", required=True, type=click.Choice([c.value for c in Condition]))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def eval_run(dataset: str, condition: str, config_path: str | None, seed: int, out_dir: str) -> None:
    """Run one condition over a dataset and write the run directory."""
    try:
        items = load_dataset(dataset)
        if not items:
            raise click.ClickException(f"dataset {dataset} has no items")
        provider_cfg = _provider_config_from(config_path)
        provider = build_provider(provider_cfg)
        with tempfile.TemporaryDirectory(prefix="mqmcat-eval-tm-") as tmp:
            run = run_condition(
                Condition(condition),
                items,
                provider,
                open_store(f"{tmp}/tm.jsonl"),
                seed=seed,
                model_id=provider_cfg.model_id,
                temperature=provider_cfg.temperature,
                config={"dataset": dataset, "provider_kind": provider_cfg.kind},
                retry=retry_policy_from(provider_cfg),
            )
        write_run_dir(run, out_dir)
    except click.ClickException:
        raise
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote run ({condition}, {len(items)} items) to {out_dir}")


@eval_group.command("compare")
@click.option("--run-a", "run_a_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--run-b", "run_b_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--metric", default="bleu", type=click.Choice(["bleu", "meteor_lite"]))
@click.option("--resamples", default=1000, type=int)
@click.option("--seed", default=0, type=int)
def eval_compare(run_a_dir: str, run_b_dir: str, metric: str, resamples: int, seed: int) -> None:
    """Paired bootstrap between two runs; prints one JSON row per direction."""
    try:
        rows = compare_runs(
            load_run_dir(run_a_dir),
            load_run_dir(run_b_dir),
            metric,
            n_resamples=resamples,
            seed=seed,
        )
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    for row in rows:
        click.echo(json.dumps(row, sort_keys=True))


@eval_group.command("report")
@click.option("--runs", "run_dirs", required=True, multiple=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--resamples", default=1000, type=int)
@click.option("--seed", default=0, type=int)
def eval_report(run_dirs: tuple[str, ...], out_dir: str, resamples: int, seed: int) -> None:
    """Score table plus pairwise comparisons across runs; writes JSON and Markdown."""
    try:
        runs = [load_run_dir(d) for d in run_dirs]
        comparisons = all_pairwise_comparisons(runs, n_resamples=resamples, seed=seed) if len(runs) > 1 else []
        build_report(runs, comparisons, out_dir)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote report for {len(runs)} runs to {out_dir}")


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
