"""Command-line front end: one-shot pipeline runs, cross-run comparison
tables, and a launcher for the HTTP service.

Exit codes for `run`: 0 success, 2 configuration error, 3 gateway error,
4 parse failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import evaluation, fixture_loader, pipeline
from .agents import FrozenClock, ParsePhaseError
from .domain import PrioritizationTechnique, ProjectDescription
from .gateway import GatewayError, MockEmbedder, ModelConfig

EXIT_CONFIG = 2
EXIT_GATEWAY = 3
EXIT_PARSE = 4


@click.group()
def main() -> None:
    """Multi-agent backlog engine."""


@main.command()
@click.argument("description_file", type=click.Path(path_type=Path))
@click.option("--model", default=None, help="Model name (defaults to the fixture's model or mock-small).")
@click.option(
    "--technique",
    "techniques",
    multiple=True,
    help="Prioritization technique (100dollar, wsjf, ahp); repeatable. Default: all three.",
)
@click.option("--output-dir", type=click.Path(path_type=Path), default=Path("out"), show_default=True)
@click.option("--mock/--live", default=True, show_default=True)
@click.option("--frozen-clock", is_flag=True, help="Deterministic timestamps for reproducible artifacts.")
@click.option("--base-url", default="", help="Provider base URL for --live runs.")
@click.option("--api-key-env", default="OPENAI_API_KEY", show_default=True)
def run(description_file, model, techniques, output_dir, mock, frozen_clock, base_url, api_key_env):
    """Run the full pipeline on DESCRIPTION_FILE (plain text or a recorded
    fixture bundle) and write the artifact set to --output-dir."""
    if not description_file.exists():
        click.echo(f"error: description file not found: {description_file}", err=True)
        sys.exit(EXIT_CONFIG)

    script = None
    embedder = None
    if fixture_loader.is_fixture_file(description_file):
        bundle = fixture_loader.load_fixture_file(description_file)
        project = bundle.project
        config = bundle.config if model is None else ModelConfig(provider="mock", model_name=model)
        script = bundle.script
        embedder = bundle.embedder
        technique_set = bundle.techniques
    else:
        body = description_file.read_text(encoding="utf-8")
        if not body.strip():
            click.echo("error: description file is empty", err=True)
            sys.exit(EXIT_CONFIG)
        project = ProjectDescription(
            id=description_file.stem, title=description_file.stem, body=body
        )
        if mock:
            config = ModelConfig(provider="mock", model_name=model or "mock-small")
        else:
            if not base_url:
                click.echo("error: --live requires --base-url", err=True)
                sys.exit(EXIT_CONFIG)
            config = ModelConfig(
                provider="openai_compatible",
                model_name=model or "gpt-3.5-turbo",
                base_url=base_url,
                api_key_env=api_key_env,
            )
        technique_set = tuple(PrioritizationTechnique)

    if techniques:
        try:
            technique_set = tuple(PrioritizationTechnique.parse(t) for t in techniques)
        except ValueError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)

    clock = FrozenClock() if frozen_clock else None
    if embedder is None and mock:
        embedder = MockEmbedder()
    try:
        session = pipeline.run_pipeline(
            session_id=project.id,
            project=project,
            config=config,
            techniques=technique_set,
            script=script,
            embedder=embedder,
            clock=clock,
        )
    except ParsePhaseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    except GatewayError as exc:
        click.echo(f"error: gateway failure: {exc}", err=True)
        sys.exit(EXIT_GATEWAY)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    written = pipeline.write_artifacts(session, output_dir)
    for path in written:
        click.echo(str(path))


@main.command()
@click.argument("session_dirs", nargs=-1, type=click.Path(path_type=Path))
@click.option("--output-dir", type=click.Path(path_type=Path), default=Path("."), show_default=True)
def compare(session_dirs, output_dir):
    """Merge metrics.json files from completed run directories into a
    plot-ready comparison table (CSV + JSON)."""
    if not session_dirs:
        click.echo("error: at least one run directory required", err=True)
        sys.exit(EXIT_CONFIG)
    runs = []
    for d in session_dirs:
        path = Path(d) / "metrics.json"
        if not path.exists():
            click.echo(f"error: missing metrics: {path}", err=True)
            sys.exit(EXIT_CONFIG)
        data = json.loads(path.read_text(encoding="utf-8"))
        runs.append(
            evaluation.RunMetrics(
                model_name=data["model_name"],
                api_response_time=data["api_response_time"],
                word_count=data["word_count"],
                distinct_epics=data["distinct_epics"],
                distinct_stories=data["distinct_stories"],
                story_similarities=data["story_similarities"],
                mean_similarity=data["mean_similarity"],
                project=data.get("project", ""),
            )
        )
    rows = evaluation.comparison_table(runs)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "comparison.csv").write_text(evaluation.table_to_csv(rows), encoding="utf-8")
    (output_dir / "comparison.json").write_text(evaluation.table_to_json(rows) + "\n", encoding="utf-8")
    click.echo(str(output_dir / "comparison.csv"))
    click.echo(str(output_dir / "comparison.json"))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--store-dir", default=None, help="Session store directory (or STORYAGENTS_STORE).")
def serve(host, port, store_dir):
    """Run the HTTP session service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store_dir), host=host, port=port)


if __name__ == "__main__":
    main()
