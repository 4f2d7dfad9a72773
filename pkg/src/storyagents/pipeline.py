"""End-to-end pipeline run (generation -> quality -> meetings -> metrics),
session serialization, artifact writing, and the RFC-4180 CSV export.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import evaluation
from .agents import AgentRuntime, FrozenClock, default_profiles
from .domain import (
    AgentRole,
    FeedbackEntry,
    MeetingEvent,
    MeetingTranscript,
    PrioritizationTechnique,
    ProjectDescription,
    RankedBacklog,
    RankEntry,
    Satisfaction,
    SessionRecord,
    StoryStatus,
    UserStory,
    format_rank,
)
from .evaluation import RunMetrics
from .gateway import ChatExchange, Message, MockEmbedder, MockScript, ModelConfig

CSV_HEADER = [
    "rank",
    "story_id",
    "epic",
    "title",
    "description",
    "acceptance_criteria",
    "technique",
    "score",
    "justification",
]


def _fmt_number(value) -> str:
    return f"{float(value):g}"


def run_pipeline(
    session_id: str,
    project: ProjectDescription,
    config: ModelConfig,
    techniques: Sequence[PrioritizationTechnique],
    script: Optional[MockScript] = None,
    embedder=None,
    clock: Optional[Callable[[], float]] = None,
    observer: Optional[Callable[[str, dict], None]] = None,
) -> SessionRecord:
    """Run the full three-phase pipeline and compute run metrics.

    `observer(kind, payload)` is called at each milestone; the session
    service maps these straight onto stream events.
    """
    project.validate()
    if not techniques:
        raise ValueError("at least one prioritization technique required")
    notify = observer or (lambda kind, payload: None)
    runtime = AgentRuntime(default_profiles(config), script=script, clock=clock)
    session = SessionRecord(
        id=session_id,
        project=project,
        config={
            "model": config.model_name,
            "provider": config.provider,
            "techniques": [t.slug for t in techniques],
        },
    )

    notify("phase_started", {"phase": "generation"})
    result, gen_exchange = runtime.run_generation(project)
    session.stories = list(result.stories)
    session.duplicate_notes = list(result.duplicate_notes)
    session.generation_reply = gen_exchange.response_text
    notify("agent_message", _agent_message("generation", AgentRole.PRODUCT_OWNER, gen_exchange))
    notify("stories_ready", {"stories": [story_to_dict(s) for s in session.stories]})

    notify("phase_started", {"phase": "quality"})
    reports, checked = runtime.run_quality(session.stories)
    session.stories = checked
    session.quality = reports
    notify("quality_ready", {"reports": [quality_report_to_dict(r) for r in reports]})

    session_events = [
        MeetingEvent(AgentRole.PRODUCT_OWNER, "generation", gen_exchange.response_text, runtime.clock()),
        MeetingEvent(AgentRole.QUALITY_ASSURANCE, "quality", f"{len(reports)} stories assessed", runtime.clock()),
    ]
    session.transcripts.append(MeetingTranscript(technique=None, events=tuple(session_events)))

    for technique in techniques:
        notify("phase_started", {"phase": "prioritization", "technique": technique.slug})
        backlog, transcript, _sheets = runtime.run_prioritization_meeting(
            session.stories, technique
        )
        session.backlogs.append(backlog)
        session.transcripts.append(transcript)
        for event in transcript.events:
            notify(
                "agent_message",
                {
                    "phase": event.phase,
                    "speaker": event.speaker.value,
                    "content": event.content,
                    "technique": technique.slug,
                },
            )
        notify("backlog_ready", backlog_to_dict(backlog))

    session.stories = [s.with_status(StoryStatus.PRIORITIZED) for s in session.stories]
    session.exchanges = list(runtime.exchanges)

    embedder = embedder if embedder is not None else MockEmbedder()
    sims = evaluation.story_similarity(session.stories, project, embedder)
    mean = sum(sims.values()) / len(sims) if sims else 0.0
    generation_exchanges = [ex for phase, _, ex in session.exchanges if phase == "generation"]
    session.metrics = RunMetrics(
        model_name=config.model_name,
        api_response_time=sum(ex.latency for ex in generation_exchanges),
        word_count=sum(ex.word_count for ex in generation_exchanges),
        distinct_epics=len({_norm(s.epic) for s in session.stories}),
        distinct_stories=len({_norm(s.title) for s in session.stories}),
        story_similarities=sims,
        mean_similarity=mean,
        project=project.title,
    )
    notify("metrics_ready", session.metrics.to_dict())
    return session


def _norm(label: str) -> str:
    from .domain import normalize_label

    return normalize_label(label)


def _agent_message(phase: str, role: AgentRole, exchange: ChatExchange) -> dict:
    return {"phase": phase, "speaker": role.value, "content": exchange.response_text}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def story_to_dict(story: UserStory) -> dict:
    return {
        "id": story.id,
        "epic": story.epic,
        "title": story.title,
        "role": story.role,
        "activity": story.activity,
        "goal": story.goal,
        "acceptance_criteria": list(story.acceptance_criteria),
        "status": story.status.value,
        "description": story.description,
    }


def story_from_dict(data: dict) -> UserStory:
    return UserStory(
        id=data["id"],
        epic=data["epic"],
        title=data["title"],
        role=data["role"],
        activity=data["activity"],
        goal=data["goal"],
        acceptance_criteria=tuple(data.get("acceptance_criteria", ())),
        status=StoryStatus(data.get("status", "draft")),
    )


def quality_report_to_dict(report) -> dict:
    return {
        "story_id": report.story_id,
        "invest": {
            k: {"pass": v.passed, "reason": v.reason} for k, v in report.invest.items()
        },
        "iso29148": {
            k: {"pass": v.passed, "reason": v.reason}
            for k, v in report.iso29148.items()
        },
        "llm_verdict": report.llm_verdict,
        "overall_pass": report.overall_pass,
    }


def backlog_to_dict(backlog: RankedBacklog) -> dict:
    return {
        "technique": backlog.technique.slug,
        "entries": [
            {
                "story_id": e.story_id,
                "rank": format_rank(e.rank),
                "score": _fmt_number(e.score),
                "justification": e.justification,
            }
            for e in backlog.entries
        ],
    }


def backlog_from_dict(data: dict) -> RankedBacklog:
    entries = tuple(
        RankEntry(
            story_id=e["story_id"],
            rank=Fraction(e["rank"]),
            score=Fraction(e["score"]),
            justification=e.get("justification", ""),
        )
        for e in data["entries"]
    )
    return RankedBacklog(
        technique=PrioritizationTechnique.parse(data["technique"]), entries=entries
    )


def transcript_to_dicts(transcript: MeetingTranscript) -> list[dict]:
    technique = transcript.technique.slug if transcript.technique else None
    return [
        {
            "technique": technique,
            "speaker": e.speaker.value,
            "phase": e.phase,
            "content": e.content,
            "timestamp": e.timestamp,
        }
        for e in transcript.events
    ]


def session_to_dict(session: SessionRecord) -> dict:
    return {
        "id": session.id,
        "project": asdict(session.project),
        "config": session.config,
        "stories": [story_to_dict(s) for s in session.stories],
        "quality": [quality_report_to_dict(r) for r in session.quality],
        "backlogs": [backlog_to_dict(b) for b in session.backlogs],
        "transcripts": [transcript_to_dicts(t) for t in session.transcripts],
        "metrics": session.metrics.to_dict() if session.metrics else None,
        "duplicate_notes": list(session.duplicate_notes),
        "feedback": [
            {**asdict(f), "satisfaction": f.satisfaction.value} for f in session.feedback
        ],
    }


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def export_backlog_csv(session: SessionRecord, technique: PrioritizationTechnique) -> str:
    """RFC-4180 CSV of one backlog; deterministic for a given session state."""
    backlog = next((b for b in session.backlogs if b.technique is technique), None)
    if backlog is None:
        raise LookupError(f"no backlog for technique {technique.slug}")
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for entry in backlog.entries:
        story = session.story_by_id(entry.story_id)
        writer.writerow(
            [
                format_rank(entry.rank),
                story.id,
                story.epic,
                story.title,
                story.description,
                "; ".join(story.acceptance_criteria),
                technique.slug,
                _fmt_number(entry.score),
                entry.justification,
            ]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Artifact writing (CLI `run` output directory)
# ---------------------------------------------------------------------------

def write_artifacts(session: SessionRecord, outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    def dump(name: str, payload) -> None:
        path = outdir / name
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        written.append(path)

    dump("stories.json", [story_to_dict(s) for s in session.stories])
    dump("quality.json", [quality_report_to_dict(r) for r in session.quality])
    dump("metrics.json", session.metrics.to_dict() if session.metrics else None)

    for backlog in session.backlogs:
        path = outdir / f"backlog_{backlog.technique.slug}.csv"
        path.write_text(export_backlog_csv(session, backlog.technique), encoding="utf-8", newline="")
        written.append(path)

    transcript_path = outdir / "transcript.ndjson"
    with transcript_path.open("w", encoding="utf-8") as fh:
        for transcript in session.transcripts:
            for row in transcript_to_dicts(transcript):
                fh.write(json.dumps(row) + "\n")
    written.append(transcript_path)
    return written
