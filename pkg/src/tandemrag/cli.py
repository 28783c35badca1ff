"""Command-line entry points: ingest, serve, report export, eval run."""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import click

from .adapters import AdapterSet
from .clock import LogicalClock
from .config import ServiceConfig
from .errors import EngineError
from .evaluation import load_script, render_table, run_experiment
from .ingest import PipelineFailure
from .workspace import Workspace


def _fail(exc: EngineError) -> None:
    click.echo(f"error [{exc.code}]: {exc.message}", err=True)
    if exc.detail:
        click.echo(json.dumps(exc.detail, indent=2), err=True)
    sys.exit(1)


def _workspace(data_dir: str, adapters_config: str | None) -> Workspace:
    adapters = AdapterSet.reference()
    if adapters_config:
        config = json.loads(Path(adapters_config).read_text(encoding="utf-8"))
        adapters = AdapterSet.from_config(config, base_dir=Path(adapters_config).parent)
    return Workspace(data_dir=data_dir, adapters=adapters)


@click.group()
def main() -> None:
    """Document intelligence engine with human-steered retrieval."""


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--adapters", "adapters_config", type=click.Path(exists=True),
              default=None, help="JSON adapter configuration file.")
@click.option("--out", "data_dir", default="data", show_default=True,
              help="Workspace data directory.")
def ingest(file: str, adapters_config: str | None, data_dir: str) -> None:
    """Run the full pipeline on FILE and persist the results."""
    workspace = _workspace(data_dir, adapters_config)
    try:
        document, job = workspace.ingest_path(file)
    except PipelineFailure as failure:
        click.echo(json.dumps(failure.job.to_dict(), indent=2))
        _fail(failure)
        return
    except EngineError as exc:
        _fail(exc)
        return
    click.echo(json.dumps(job.to_dict(), indent=2))
    click.echo(f"indexed {document.document_id} "
               f"({document.page_count} pages, "
               f"{sum(1 for _ in document.iter_blocks())} blocks)")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--data", "data_dir", default=None)
def serve(config_path: str | None, host: str | None, port: int | None,
          data_dir: str | None) -> None:
    """Start the HTTP service."""
    from .service import serve as run_service

    try:
        config = ServiceConfig.load(config_path)
        if host:
            config = config.model_copy(update={"host": host})
        if port:
            config = config.model_copy(update={"port": port})
        if data_dir:
            config = config.model_copy(update={"data_dir": data_dir})
        run_service(config)
    except EngineError as exc:
        _fail(exc)


@main.group()
def report() -> None:
    """Report operations."""


@report.command("export")
@click.argument("report_id")
@click.option("--format", "fmt", type=click.Choice(["md", "html"]), required=True)
@click.option("--data", "data_dir", default="data", show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write to a file instead of stdout.")
def report_export(report_id: str, fmt: str, data_dir: str,
                  out_path: str | None) -> None:
    """Export a report as markdown or HTML."""
    workspace = Workspace(data_dir=data_dir)
    try:
        data = workspace.reports.export_report(report_id, fmt)
    except EngineError as exc:
        _fail(exc)
        return
    if out_path:
        Path(out_path).write_bytes(data)
        click.echo(f"wrote {out_path} ({len(data)} bytes)")
    else:
        click.echo(data.decode("utf-8"), nl=False)


@main.group("eval")
def eval_group() -> None:
    """Strategy evaluation."""


@eval_group.command("run")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory of documents to ingest.")
@click.option("--scripts", "scripts_dir", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory of session script JSON files.")
@click.option("--strategies", default="naive,label,symbiotic", show_default=True,
              help="Comma-separated strategy names.")
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--data", "data_dir", default=None,
              help="Workspace directory (default: fresh temporary).")
@click.option("--json-out", "json_out", type=click.Path(), default=None,
              help="Also write the machine-readable table to a file.")
def eval_run(corpus_dir: str, scripts_dir: str, strategies: str, k: int,
             data_dir: str | None, json_out: str | None) -> None:
    """Replay scripted sessions per strategy and print the comparison table."""
    strategy_list = [s.strip() for s in strategies.split(",") if s.strip()]
    try:
        with tempfile.TemporaryDirectory() as tmp:
            workspace = Workspace(data_dir=data_dir or tmp, clock=LogicalClock(), k=k)
            for path in sorted(Path(corpus_dir).iterdir()):
                if path.is_file():
                    workspace.ingest_path(path)
            scripts = []
            for path in sorted(Path(scripts_dir).glob("*.json")):
                script, raw = load_script(path)
                scripts.append((script, raw, str(path)))
            table = run_experiment(workspace.sessions, scripts, strategy_list)
    except EngineError as exc:
        _fail(exc)
        return
    click.echo(render_table(table))
    if json_out:
        Path(json_out).write_text(json.dumps(table, indent=2) + "\n",
                                  encoding="utf-8")
        click.echo(f"wrote {json_out}")


if __name__ == "__main__":
    main()
