"""Core vocabulary shared by the whole pipeline: stories, epics, agents,
techniques, rankings, sessions.

Everything here is an immutable value object; ranks are exact rationals so
average-rank ties such as 1.5 compare exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional


class AgentRole(str, enum.Enum):
    PRODUCT_OWNER = "ProductOwner"
    QUALITY_ASSURANCE = "QualityAssurance"
    SENIOR_DEVELOPER = "SeniorDeveloper"
    MANAGER = "Manager"


class PrioritizationTechnique(str, enum.Enum):
    HUNDRED_DOLLAR = "HundredDollar"
    WSJF = "WSJF"
    AHP = "AHP"

    @property
    def slug(self) -> str:
        return _TECHNIQUE_SLUGS[self]

    @classmethod
    def parse(cls, raw: str) -> "PrioritizationTechnique":
        key = raw.strip().lower().replace("-", "").replace("_", "").replace(" ", "")
        for tech, slug in _TECHNIQUE_SLUGS.items():
            if key in (slug, tech.value.lower(), slug.replace("dollar", "dollars")):
                return tech
        if key in ("hundreddollar", "hundreddollars", "$100", "100$"):
            return cls.HUNDRED_DOLLAR
        raise ValueError(f"unknown prioritization technique: {raw!r}")


_TECHNIQUE_SLUGS = {
    PrioritizationTechnique.HUNDRED_DOLLAR: "100dollar",
    PrioritizationTechnique.WSJF: "wsjf",
    PrioritizationTechnique.AHP: "ahp",
}


class StoryStatus(str, enum.Enum):
    DRAFT = "draft"
    QUALITY_CHECKED = "quality_checked"
    PRIORITIZED = "prioritized"


class Satisfaction(str, enum.Enum):
    SATISFACTORY = "satisfactory"
    GOOD = "good"
    EXCELLENT = "excellent"
    POOR = "poor"


@dataclass(frozen=True)
class ProjectDescription:
    id: str
    title: str
    body: str

    def validate(self) -> None:
        if not self.body.strip():
            raise ValueError("project body must be non-empty")


@dataclass(frozen=True)
class UserStory:
    id: str
    epic: str
    title: str
    role: str
    activity: str
    goal: str
    acceptance_criteria: tuple[str, ...] = ()
    status: StoryStatus = StoryStatus.DRAFT

    @property
    def description(self) -> str:
        """Rendered one-sentence form used for similarity and CSV export."""
        return f"As a {self.role}, I want {self.activity}, so that {self.goal}."

    def with_status(self, status: StoryStatus) -> "UserStory":
        return replace(self, status=status)


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str


def normalize_label(raw: str) -> str:
    """Canonical form used to decide whether two epic/story labels are
    "the same": trim, collapse internal whitespace, casefold."""
    return " ".join(raw.split()).casefold()


def validate_story(story: UserStory) -> list[Violation]:
    """Check UserStory invariants; violations are data, not failures."""
    out: list[Violation] = []
    if not story.title.strip():
        out.append(Violation("title", "missing"))
    if not story.role.strip():
        out.append(Violation("role", "missing"))
    if not story.activity.strip():
        out.append(Violation("activity", "missing"))
    if not story.goal.strip():
        out.append(Violation("goal", "missing"))
    if not story.acceptance_criteria and story.status != StoryStatus.DRAFT:
        out.append(Violation("acceptance_criteria", "required"))
    return out


@dataclass(frozen=True)
class RankEntry:
    story_id: str
    rank: Fraction
    score: Fraction | float
    justification: str = ""


@dataclass(frozen=True)
class RankedBacklog:
    technique: PrioritizationTechnique
    entries: tuple[RankEntry, ...]

    def __post_init__(self) -> None:
        n = len(self.entries)
        total = sum((e.rank for e in self.entries), Fraction(0))
        if total != Fraction(n * (n + 1), 2):
            raise ValueError(
                f"rank sum {total} != {Fraction(n * (n + 1), 2)} for {n} entries"
            )
        ordered = sorted(self.entries, key=lambda e: (e.rank, e.story_id))
        object.__setattr__(self, "entries", tuple(ordered))


def format_rank(rank: Fraction) -> str:
    """Display form: "1.5" for halves, "3" for whole ranks."""
    return f"{float(rank):g}"


@dataclass(frozen=True)
class FeedbackEntry:
    practitioner_role: str
    experience: str
    satisfaction: Satisfaction
    comment: str = ""
    suggestion: str = ""


@dataclass(frozen=True)
class AgentProfile:
    role: AgentRole
    system_prompt: str
    model_ref: "object" = None  # ModelConfig; typed loosely to avoid an import cycle


@dataclass(frozen=True)
class MeetingEvent:
    speaker: AgentRole
    phase: str  # generation | quality | prioritization | merge
    content: str
    timestamp: float


@dataclass(frozen=True)
class MeetingTranscript:
    technique: Optional[PrioritizationTechnique]
    events: tuple[MeetingEvent, ...]


@dataclass
class SessionRecord:
    """Everything produced by one pipeline run. Mutable only while the
    pipeline is executing; treated as a snapshot afterwards."""

    id: str
    project: ProjectDescription
    config: dict
    stories: list[UserStory] = field(default_factory=list)
    quality: list = field(default_factory=list)  # QualityReport
    transcripts: list[MeetingTranscript] = field(default_factory=list)
    backlogs: list[RankedBacklog] = field(default_factory=list)
    metrics: Optional[object] = None  # RunMetrics
    feedback: list[FeedbackEntry] = field(default_factory=list)
    exchanges: list = field(default_factory=list)  # (phase, AgentRole, ChatExchange)
    duplicate_notes: list[str] = field(default_factory=list)
    generation_reply: str = ""

    def story_by_id(self, story_id: str) -> UserStory:
        for s in self.stories:
            if s.id == story_id:
                return s
        raise KeyError(story_id)
