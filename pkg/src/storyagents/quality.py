"""Deterministic story-quality lint: INVEST plus a selected subset of the
ISO/IEC/IEEE 29148 quality attributes, combined with the QA agent's verdict.

The rule set is heuristic by design (keyword lists and word-count thresholds)
and configurable from a JSON file; the defaults below are the tested contract.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .domain import UserStory, normalize_label
from .parsing import QaVerdict

INVEST_LETTERS = ("I", "N", "V", "E", "S", "T")
ISO_ATTRIBUTES = ("unambiguous", "singular", "feasible_structure", "verifiable", "complete")


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    reason: str = ""


@dataclass(frozen=True)
class QualityReport:
    story_id: str
    invest: dict
    iso29148: dict
    llm_verdict: Optional[str] = None
    overall_pass: bool = True

    @staticmethod
    def build(story_id, invest, iso29148, llm_verdict=None) -> "QualityReport":
        overall = all(r.passed for r in invest.values()) and all(
            r.passed for r in iso29148.values()
        )
        return QualityReport(
            story_id=story_id,
            invest=invest,
            iso29148=iso29148,
            llm_verdict=llm_verdict,
            overall_pass=overall,
        )


@dataclass(frozen=True)
class LintConfig:
    implementation_keywords: tuple[str, ...] = (
        "must use",
        "postgresql",
        "mysql",
        "mongodb",
        "react",
        "angular",
        "vue",
        "kubernetes",
        "docker",
        "redis",
        "kafka",
    )
    verifiable_verbs: tuple[str, ...] = (
        "display",
        "return",
        "store",
        "validate",
        "allow",
        "show",
        "send",
        "receive",
        "create",
        "update",
        "delete",
        "verify",
        "confirm",
        "notify",
        "list",
        "save",
        "export",
        "reject",
        "prevent",
    )
    hedge_words: tuple[str, ...] = (
        "etc.",
        "etc",
        "and/or",
        "as appropriate",
        "as needed",
        "tbd",
        "if possible",
        "somehow",
    )
    dependency_phrases: tuple[str, ...] = ("depends on", "after story")
    max_activity_words: int = 30
    max_description_words: int = 50
    max_criteria: int = 7

    @classmethod
    def from_file(cls, path: str | Path) -> "LintConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        kwargs = {}
        for f in cls.__dataclass_fields__:
            if f in data:
                val = data[f]
                kwargs[f] = tuple(val) if isinstance(val, list) else val
        return cls(**kwargs)


DEFAULT_CONFIG = LintConfig()

_STORY_REF_RE = re.compile(r"\bUS-\d{3,}\b", re.IGNORECASE)
_WORD_RE = re.compile(r"[a-z]+")


def _contains_keyword(text: str, keywords: Sequence[str]) -> Optional[str]:
    low = text.casefold()
    for kw in keywords:
        if kw in low:
            return kw
    return None


def lint_story(
    story: UserStory,
    all_stories: Sequence[UserStory],
    config: LintConfig = DEFAULT_CONFIG,
) -> QualityReport:
    """Rule-table evaluation; pure in (story, all_stories, config)."""
    if all(s.id != story.id for s in all_stories):
        raise ValueError(f"story {story.id} not part of the story set")
    text = f"{story.activity} {story.description}"

    invest = {}

    ref = _STORY_REF_RE.search(text)
    dep = _contains_keyword(text, config.dependency_phrases)
    if ref:
        invest["I"] = CheckResult(False, f"references another story ({ref.group(0)})")
    elif dep:
        invest["I"] = CheckResult(False, f"dependency phrase {dep!r}")
    else:
        invest["I"] = CheckResult(True, "no cross-story dependency")

    kw = _contains_keyword(text, config.implementation_keywords)
    invest["N"] = (
        CheckResult(False, f"implementation-mandating term {kw!r}")
        if kw
        else CheckResult(True, "no implementation mandate")
    )

    invest["V"] = (
        CheckResult(True, "goal clause present")
        if story.goal.strip()
        else CheckResult(False, "no so-that clause")
    )

    slots_ok = all(x.strip() for x in (story.role, story.activity, story.goal))
    activity_words = len(story.activity.split())
    if not slots_ok:
        invest["E"] = CheckResult(False, "template slot missing")
    elif activity_words > config.max_activity_words:
        invest["E"] = CheckResult(
            False, f"activity has {activity_words} words (> {config.max_activity_words})"
        )
    else:
        invest["E"] = CheckResult(True, "slots filled, activity concise")

    desc_words = len(story.description.split())
    if desc_words > config.max_description_words:
        invest["S"] = CheckResult(
            False, f"description has {desc_words} words (> {config.max_description_words})"
        )
    elif len(story.acceptance_criteria) > config.max_criteria:
        invest["S"] = CheckResult(
            False,
            f"{len(story.acceptance_criteria)} acceptance criteria (> {config.max_criteria})",
        )
    else:
        invest["S"] = CheckResult(True, "within size limits")

    # Testable: at least one criterion carries a verifiable verb.  A stricter
    # every-criterion rule would let an added criterion flip T from pass to
    # fail, which the monotonicity contract forbids.
    testable = any(
        _contains_keyword(c, config.verifiable_verbs) for c in story.acceptance_criteria
    )
    if not story.acceptance_criteria:
        invest["T"] = CheckResult(False, "no acceptance criteria")
    elif testable:
        invest["T"] = CheckResult(True, "verifiable criterion present")
    else:
        invest["T"] = CheckResult(False, "no criterion contains a verifiable verb")

    iso = {}
    hedge = _contains_keyword(story.description, config.hedge_words)
    iso["unambiguous"] = (
        CheckResult(False, f"hedge word {hedge!r}")
        if hedge
        else CheckResult(True, "no hedge words")
    )
    and_count = len(re.findall(r"\band\b", story.activity.casefold()))
    iso["singular"] = (
        CheckResult(True, "single activity")
        if and_count <= 1
        else CheckResult(False, f"{and_count} coordinating 'and's in activity")
    )
    iso["feasible_structure"] = (
        CheckResult(True, "all template slots filled")
        if slots_ok and story.title.strip()
        else CheckResult(False, "template slot missing")
    )
    iso["verifiable"] = invest["T"]
    iso["complete"] = (
        CheckResult(True, "epic label present")
        if story.epic.strip()
        else CheckResult(False, "no epic label")
    )

    return QualityReport.build(story.id, invest, iso)


def combine(lint: QualityReport, verdict: QaVerdict) -> QualityReport:
    """Merge the deterministic lint with the QA agent's verdict. A letter
    fails when either source fails it; lint reasons win on shared failures."""
    if lint.story_id != verdict.story_id:
        raise ValueError(
            f"id mismatch: lint={lint.story_id} verdict={verdict.story_id}"
        )
    invest = {}
    for letter in INVEST_LETTERS:
        lint_res = lint.invest[letter]
        llm_passed, llm_reason = verdict.verdicts.get(letter, (True, ""))
        if not lint_res.passed:
            invest[letter] = lint_res
        elif not llm_passed:
            invest[letter] = CheckResult(False, f"QA agent: {llm_reason}" if llm_reason else "QA agent failed this letter")
        else:
            invest[letter] = lint_res
    return QualityReport.build(
        lint.story_id, invest, dict(lint.iso29148), llm_verdict=verdict.raw_text
    )
