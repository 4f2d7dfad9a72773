"""Per-model run metrics: response time, word count, distinct epic/story
counts, and semantic similarity between each story and the project text.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .domain import ProjectDescription, SessionRecord, UserStory, normalize_label
from .gateway import EmbeddingVector


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class RunMetrics:
    model_name: str
    api_response_time: float  # seconds, generation-phase exchanges only
    word_count: int
    distinct_epics: int
    distinct_stories: int
    story_similarities: dict
    mean_similarity: float
    project: str = ""

    def to_dict(self) -> dict:
        return {
            "project": self.project,
            "model_name": self.model_name,
            "api_response_time": self.api_response_time,
            "word_count": self.word_count,
            "distinct_epics": self.distinct_epics,
            "distinct_stories": self.distinct_stories,
            "story_similarities": dict(self.story_similarities),
            "mean_similarity": self.mean_similarity,
        }


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} != {b.dimension}")
    na = math.sqrt(sum(x * x for x in a.values))
    nb = math.sqrt(sum(x * x for x in b.values))
    if na == 0 or nb == 0:
        raise ValueError("cosine undefined for the zero vector")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    return dot / (na * nb)


def story_similarity(
    stories: Sequence[UserStory],
    project: ProjectDescription,
    embedder,
) -> dict[str, float]:
    """Cosine between each story's rendered description and the project body.
    The project embedding is computed once per run."""
    if not stories:
        return {}
    project_vec = embedder.embed([project.body])[0]
    story_vecs = embedder.embed([s.description for s in stories])
    return {
        s.id: cosine(vec, project_vec) for s, vec in zip(stories, story_vecs)
    }


def compute_run_metrics(
    session: SessionRecord,
    model_name: str,
    embedder=None,
) -> RunMetrics:
    """The comparison metric quadruple for one model run.

    Uses similarities already stored on the session when no embedder is given.
    """
    generation = [
        ex for phase, _, ex in session.exchanges if phase == "generation"
    ]
    if not generation or not session.stories:
        raise MetricsError(f"session has no completed generation phase for {model_name}")
    api_time = sum(ex.latency for ex in generation)
    word_count = sum(ex.word_count for ex in generation)
    distinct_epics = len({normalize_label(s.epic) for s in session.stories})
    distinct_stories = len({normalize_label(s.title) for s in session.stories})
    if embedder is not None:
        sims = story_similarity(session.stories, session.project, embedder)
    elif isinstance(session.metrics, RunMetrics):
        sims = dict(session.metrics.story_similarities)
    else:
        raise MetricsError("no embedder given and no similarities stored")
    mean = sum(sims.values()) / len(sims) if sims else 0.0
    return RunMetrics(
        model_name=model_name,
        api_response_time=api_time,
        word_count=word_count,
        distinct_epics=distinct_epics,
        distinct_stories=distinct_stories,
        story_similarities=sims,
        mean_similarity=mean,
        project=session.project.title,
    )


TABLE_METRICS = ("distinct_epics", "distinct_stories", "api_response_time", "mean_similarity")


def comparison_table(runs: Sequence[RunMetrics]) -> list[dict]:
    """Plot-ready long-format rows (project, model, metric, value)."""
    if not runs:
        raise MetricsError("at least one run required")
    rows = []
    for run in runs:
        for metric in TABLE_METRICS:
            value = getattr(run, metric)
            if metric == "api_response_time":
                value = round(value, 2)
            rows.append(
                {
                    "project": run.project,
                    "model": run.model_name,
                    "metric": metric,
                    "value": value,
                }
            )
    return rows


def table_to_csv(rows: Sequence[Mapping]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["project", "model", "metric", "value"])
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def table_to_json(rows: Sequence[Mapping]) -> str:
    return json.dumps(list(rows), indent=2)
