"""Recorded-run fixture bundles: project text, scripted agent replies with
the originally observed latencies, and recorded embeddings, so reported
metrics replay deterministically without any model access.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .domain import PrioritizationTechnique, ProjectDescription
from .gateway import MockScript, ModelConfig, RecordedEmbedder


@dataclass(frozen=True)
class FixtureBundle:
    name: str
    project: ProjectDescription
    config: ModelConfig
    techniques: tuple[PrioritizationTechnique, ...]
    script: MockScript
    embedder: RecordedEmbedder


def load_fixture_data(data: dict, name: str = "") -> FixtureBundle:
    project = ProjectDescription(
        id=data["project"]["id"],
        title=data["project"]["title"],
        body=data["project"]["body"],
    )
    return FixtureBundle(
        name=data.get("name", name),
        project=project,
        config=ModelConfig(provider="mock", model_name=data["model_name"]),
        techniques=tuple(
            PrioritizationTechnique.parse(t) for t in data.get("techniques", ["100dollar"])
        ),
        script=MockScript.from_list(data.get("script", [])),
        embedder=RecordedEmbedder(data.get("embeddings", {})),
    )


def load_fixture_file(path: str | Path) -> FixtureBundle:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    return load_fixture_data(data, name=path.stem)


def packaged_fixture_names() -> list[str]:
    root = resources.files("storyagents.fixtures")
    return sorted(
        p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json")
    )


def load_packaged_fixture(name: str) -> FixtureBundle:
    payload = (
        resources.files("storyagents.fixtures").joinpath(f"{name}.json").read_text("utf-8")
    )
    return load_fixture_data(json.loads(payload), name=name)


def is_fixture_file(path: str | Path) -> bool:
    path = Path(path)
    if path.suffix != ".json":
        return False
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return False
    return isinstance(data, dict) and "project" in data and "model_name" in data
