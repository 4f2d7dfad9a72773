"""Extraction of epics, stories, score sheets, and quality verdicts from raw
LLM reply text.

Every entry point returns a ParseOutcome instead of raising: malformed model
output is data, not a crash. Unknown JSON fields are ignored; missing required
fields are violations. Numeric fields accept ints, floats, or decimal strings
and are normalized to exact Fractions where allocations/ranks are involved.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from .domain import (
    AgentRole,
    PrioritizationTechnique,
    StoryStatus,
    UserStory,
    normalize_label,
)


class NoJsonFound(Exception):
    pass


@dataclass(frozen=True)
class ParseOutcome:
    raw: str
    value: Any = None
    violations: tuple[tuple[str, str], ...] = ()

    @property
    def is_ok(self) -> bool:
        return not self.violations

    @classmethod
    def ok(cls, raw: str, value: Any) -> "ParseOutcome":
        return cls(raw=raw, value=value)

    @classmethod
    def fail(cls, raw: str, violations: list[tuple[str, str]]) -> "ParseOutcome":
        return cls(raw=raw, violations=tuple(violations))


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\s*\n(.*?)```", re.DOTALL)


def extract_json_block(reply: str) -> str:
    """Content of the first fenced code block, else the first-'{' to
    last-'}' substring. Raises NoJsonFound when neither exists."""
    m = _FENCE_RE.search(reply)
    if m:
        return m.group(1).strip()
    start = reply.find("{")
    end = reply.rfind("}")
    if start == -1 or end == -1 or end < start:
        raise NoJsonFound("reply contains neither a fenced block nor a JSON object")
    return reply[start : end + 1]


def _load_object(reply: str) -> tuple[Optional[dict], list[tuple[str, str]]]:
    try:
        block = extract_json_block(reply)
    except NoJsonFound:
        return None, [("$", "no JSON object found")]
    try:
        data = json.loads(block)
    except (json.JSONDecodeError, RecursionError) as exc:
        return None, [("$", f"invalid JSON: {exc}")]
    if not isinstance(data, dict):
        return None, [("$", "top-level JSON value must be an object")]
    return data, []


def _as_text(value: Any) -> Optional[str]:
    return value if isinstance(value, str) else None


def _as_number(value: Any) -> Optional[Fraction]:
    """Accept int, float, or decimal string; reject bools and anything else."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        try:
            return Fraction(value).limit_denominator(10**9)
        except (OverflowError, ValueError):
            return None
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            return None
    return None


@dataclass(frozen=True)
class GenerationResult:
    stories: tuple[UserStory, ...]
    epics: tuple[str, ...]
    duplicate_notes: tuple[str, ...] = ()


def parse_generation(reply: str) -> ParseOutcome:
    """Parse the generation-phase payload {"epics": [{"name", "stories": [...]}]}.

    Assigns zero-padded story ids in traversal order and collapses stories
    whose normalized titles coincide, recording a note per collapse.
    """
    data, violations = _load_object(reply)
    if violations:
        return ParseOutcome.fail(reply, violations)

    epics_raw = data.get("epics")
    if not isinstance(epics_raw, list) or not epics_raw:
        return ParseOutcome.fail(reply, [("$.epics", "missing or empty array")])

    parsed: list[dict] = []
    for i, epic in enumerate(epics_raw):
        path = f"$.epics[{i}]"
        if not isinstance(epic, dict):
            violations.append((path, "must be an object"))
            continue
        name = _as_text(epic.get("name"))
        if not name or not name.strip():
            violations.append((f"{path}.name", "missing"))
            continue
        stories_raw = epic.get("stories")
        if not isinstance(stories_raw, list):
            violations.append((f"{path}.stories", "missing array"))
            continue
        for j, raw in enumerate(stories_raw):
            spath = f"{path}.stories[{j}]"
            if not isinstance(raw, dict):
                violations.append((spath, "must be an object"))
                continue
            fields = {}
            bad = False
            for key in ("title", "role", "activity", "goal"):
                val = _as_text(raw.get(key))
                if val is None or not val.strip():
                    violations.append((f"{spath}.{key}", "missing"))
                    bad = True
                else:
                    fields[key] = val.strip()
            criteria_raw = raw.get("acceptance_criteria", [])
            if not isinstance(criteria_raw, list) or any(
                not isinstance(c, str) for c in criteria_raw
            ):
                violations.append((f"{spath}.acceptance_criteria", "must be an array of strings"))
                bad = True
            if bad:
                continue
            parsed.append(
                {
                    "epic": name.strip(),
                    "criteria": tuple(c.strip() for c in criteria_raw if c.strip()),
                    **fields,
                }
            )
    if violations:
        return ParseOutcome.fail(reply, violations)
    if not parsed:
        return ParseOutcome.fail(reply, [("$.epics", "no stories present")])

    seen: dict[str, str] = {}
    notes: list[str] = []
    stories: list[UserStory] = []
    epics: list[str] = []
    for item in parsed:
        if item["epic"] not in epics:
            epics.append(item["epic"])
        key = normalize_label(item["title"])
        if key in seen:
            notes.append(
                f"duplicate story title {item['title']!r} collapsed into {seen[key]}"
            )
            continue
        sid = f"US-{len(stories) + 1:03d}"
        seen[key] = sid
        stories.append(
            UserStory(
                id=sid,
                epic=item["epic"],
                title=item["title"],
                role=item["role"],
                activity=item["activity"],
                goal=item["goal"],
                acceptance_criteria=item["criteria"],
                status=StoryStatus.DRAFT,
            )
        )
    return ParseOutcome.ok(
        reply,
        GenerationResult(
            stories=tuple(stories), epics=tuple(epics), duplicate_notes=tuple(notes)
        ),
    )


def serialize_generation(stories) -> dict:
    """Inverse of parse_generation for valid story sets; used for prompt
    payloads and the round-trip test."""
    epics: dict[str, list] = {}
    for s in stories:
        epics.setdefault(s.epic, []).append(
            {
                "title": s.title,
                "role": s.role,
                "activity": s.activity,
                "goal": s.goal,
                "acceptance_criteria": list(s.acceptance_criteria),
            }
        )
    return {"epics": [{"name": name, "stories": items} for name, items in epics.items()]}


# ---------------------------------------------------------------------------
# Score sheets
# ---------------------------------------------------------------------------

WSJF_COMPONENTS = ("cod_value", "time_criticality", "risk_reduction", "job_size")


@dataclass(frozen=True)
class ScoreSheet:
    agent: AgentRole
    technique: PrioritizationTechnique
    entries: dict
    justifications: dict = field(default_factory=dict)


def parse_score_sheet(
    reply: str,
    technique: PrioritizationTechnique,
    story_ids: list[str],
    agent: AgentRole = AgentRole.PRODUCT_OWNER,
) -> ParseOutcome:
    if not story_ids:
        raise ValueError("story_ids must be non-empty")
    data, violations = _load_object(reply)
    if violations:
        return ParseOutcome.fail(reply, violations)
    rows = data.get("scores")
    if not isinstance(rows, list):
        return ParseOutcome.fail(reply, [("$.scores", "missing array")])

    entries: dict = {}
    justifications: dict = {}
    for i, row in enumerate(rows):
        path = f"$.scores[{i}]"
        if not isinstance(row, dict):
            violations.append((path, "must be an object"))
            continue
        sid = _as_text(row.get("story_id"))
        if not sid:
            violations.append((f"{path}.story_id", "missing"))
            continue
        if sid in entries:
            violations.append((f"{path}.story_id", f"duplicate entry for {sid}"))
            continue
        value, err = _parse_score_value(technique, row.get("value"))
        if err:
            violations.append((f"{path}.value", err))
            continue
        entries[sid] = value
        justifications[sid] = _as_text(row.get("justification")) or ""
    if violations:
        return ParseOutcome.fail(reply, violations)

    got, want = set(entries), set(story_ids)
    if got != want:
        missing = sorted(want - got)
        extra = sorted(got - want)
        return ParseOutcome.fail(
            reply,
            [("$.scores", f"coverage mismatch: missing={missing} extra={extra}")],
        )
    if technique is PrioritizationTechnique.HUNDRED_DOLLAR:
        total = sum(entries.values())
        if total != 100:
            return ParseOutcome.fail(reply, [("$.scores", f"sum={total}≠100")])
    return ParseOutcome.ok(
        reply,
        ScoreSheet(agent=agent, technique=technique, entries=entries, justifications=justifications),
    )


def _parse_score_value(technique: PrioritizationTechnique, raw: Any):
    if technique is PrioritizationTechnique.WSJF:
        if not isinstance(raw, dict):
            return None, "WSJF value must be an object"
        out = {}
        for key in WSJF_COMPONENTS:
            num = _as_number(raw.get(key))
            if num is None:
                return None, f"missing or non-numeric component {key!r}"
            if not Fraction(1) <= num <= Fraction(10):
                return None, f"component {key!r}={num} outside [1, 10]"
            out[key] = num
        return out, None
    num = _as_number(raw)
    if num is None:
        return None, "missing or non-numeric value"
    if technique is PrioritizationTechnique.HUNDRED_DOLLAR:
        if num.denominator != 1 or num < 0:
            return None, f"allocation {num} must be a non-negative integer"
        return num, None
    if not Fraction(1) <= num <= Fraction(9):
        return None, f"importance {num} outside [1, 9]"
    return num, None


# ---------------------------------------------------------------------------
# Quality verdicts and manager rankings
# ---------------------------------------------------------------------------

INVEST_LETTERS = ("I", "N", "V", "E", "S", "T")


@dataclass(frozen=True)
class QaVerdict:
    story_id: str
    verdicts: dict  # letter -> (passed: bool, reason: str)
    raw_text: str = ""


def parse_quality_verdict(reply: str, story_id: str) -> ParseOutcome:
    data, violations = _load_object(reply)
    if violations:
        return ParseOutcome.fail(reply, violations)
    sid = _as_text(data.get("story_id"))
    if sid != story_id:
        return ParseOutcome.fail(
            reply, [("$.story_id", f"expected {story_id!r}, got {sid!r}")]
        )
    verdicts_raw = data.get("verdicts")
    if not isinstance(verdicts_raw, dict):
        return ParseOutcome.fail(reply, [("$.verdicts", "missing object")])
    verdicts = {}
    for letter in INVEST_LETTERS:
        row = verdicts_raw.get(letter)
        if not isinstance(row, dict):
            violations.append((f"$.verdicts.{letter}", "missing"))
            continue
        passed = row.get("pass")
        if isinstance(passed, str):
            passed = {"pass": True, "fail": False}.get(passed.lower())
        if not isinstance(passed, bool):
            violations.append((f"$.verdicts.{letter}.pass", "must be pass/fail"))
            continue
        verdicts[letter] = (passed, _as_text(row.get("reason")) or "")
    if violations:
        return ParseOutcome.fail(reply, violations)
    return ParseOutcome.ok(reply, QaVerdict(story_id=story_id, verdicts=verdicts, raw_text=reply))


def parse_manager_ranking(reply: str, story_ids: list[str]) -> ParseOutcome:
    """Manager synthesis payload {"ranking": [{"story_id", "score",
    "justification"}]}; higher score means higher priority."""
    data, violations = _load_object(reply)
    if violations:
        return ParseOutcome.fail(reply, violations)
    rows = data.get("ranking")
    if not isinstance(rows, list):
        return ParseOutcome.fail(reply, [("$.ranking", "missing array")])
    scores: dict = {}
    justifications: dict = {}
    for i, row in enumerate(rows):
        path = f"$.ranking[{i}]"
        if not isinstance(row, dict):
            violations.append((path, "must be an object"))
            continue
        sid = _as_text(row.get("story_id"))
        if not sid:
            violations.append((f"{path}.story_id", "missing"))
            continue
        if sid in scores:
            violations.append((f"{path}.story_id", f"duplicate entry for {sid}"))
            continue
        num = _as_number(row.get("score"))
        if num is None:
            violations.append((f"{path}.score", "missing or non-numeric"))
            continue
        scores[sid] = num
        justifications[sid] = _as_text(row.get("justification")) or ""
    if violations:
        return ParseOutcome.fail(reply, violations)
    if set(scores) != set(story_ids):
        missing = sorted(set(story_ids) - set(scores))
        extra = sorted(set(scores) - set(story_ids))
        return ParseOutcome.fail(
            reply, [("$.ranking", f"coverage mismatch: missing={missing} extra={extra}")]
        )
    return ParseOutcome.ok(reply, (scores, justifications))
