"""The four agent profiles and the three pipeline phases: story generation,
quality assessment, and the prioritization meeting.

The meeting protocol is: the Product Owner opens with an overview, the PO,
QA, and Senior Developer each return a score sheet (QA and Dev may be
elicited concurrently; merge inputs are keyed by role, not arrival order),
and the Manager synthesizes the final ranking. If the Manager reply cannot
be parsed, the deterministic average-rank merge is used instead and the
transcript records the fallback.
"""

from __future__ import annotations

import json
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional, Sequence

from . import parsing, prioritization, quality
from .aggregation import RankingVector, merge_borda
from .domain import (
    AgentProfile,
    AgentRole,
    MeetingEvent,
    MeetingTranscript,
    PrioritizationTechnique,
    ProjectDescription,
    RankedBacklog,
    RankEntry,
    StoryStatus,
    UserStory,
)
from .gateway import ChatExchange, LlmClient, Message, MockScript, ModelConfig


class MissingPlaceholderError(KeyError):
    pass


class ParsePhaseError(Exception):
    """LLM reply failed to parse even after the corrective retry."""

    def __init__(self, phase: str, violations) -> None:
        self.phase = phase
        self.violations = violations
        super().__init__(f"{phase} reply unparseable: {violations}")


QUALITY_FRAMEWORK = "INVEST and ISO/IEC/IEEE 29148"

TECHNIQUE_INSTRUCTIONS = {
    PrioritizationTechnique.HUNDRED_DOLLAR: (
        "Allocate exactly 100 points across the stories; each value is a "
        "non-negative integer allocation and the values must sum to 100."
    ),
    PrioritizationTechnique.WSJF: (
        'WSJF scoring: each value is an object {"cod_value": 1-10, '
        '"time_criticality": 1-10, "risk_reduction": 1-10, "job_size": 1-10}.'
    ),
    PrioritizationTechnique.AHP: (
        "AHP scoring: each value is an importance score from 1 (lowest) to 9 "
        "(highest) on the Saaty scale."
    ),
}


def load_template(name: str) -> str:
    return resources.files("storyagents.prompts").joinpath(f"{name}.txt").read_text(
        encoding="utf-8"
    )


def render_prompt(template: str, context: dict) -> str:
    """Total template substitution: every placeholder must be supplied."""
    fields = {
        fname
        for _, fname, _, _ in string.Formatter().parse(template)
        if fname is not None and fname != ""
    }
    missing = sorted(fields - set(context))
    if missing:
        raise MissingPlaceholderError(f"missing placeholders: {', '.join(missing)}")
    return template.format(**{k: context[k] for k in fields})


_SYSTEM_TEMPLATES = {
    AgentRole.PRODUCT_OWNER: "product_owner",
    AgentRole.QUALITY_ASSURANCE: "quality_assurance",
    AgentRole.SENIOR_DEVELOPER: "senior_developer",
    AgentRole.MANAGER: "manager",
}


def default_profiles(config: ModelConfig) -> dict[AgentRole, AgentProfile]:
    return {
        role: AgentProfile(
            role=role,
            system_prompt=load_template(name),
            model_ref=config,
        )
        for role, name in _SYSTEM_TEMPLATES.items()
    }


def stories_payload(stories: Sequence[UserStory]) -> str:
    """Compact story listing embedded into meeting prompts."""
    return json.dumps(
        [
            {
                "story_id": s.id,
                "title": s.title,
                "epic": s.epic,
                "description": s.description,
            }
            for s in stories
        ],
        indent=2,
    )


def _sheet_payload(sheet: parsing.ScoreSheet) -> dict:
    def plain(v):
        if isinstance(v, dict):
            return {k: plain(x) for k, x in v.items()}
        return float(v)

    return {
        "agent": sheet.agent.value,
        "technique": sheet.technique.value,
        "entries": {sid: plain(v) for sid, v in sheet.entries.items()},
        "justifications": dict(sheet.justifications),
    }


class AgentRuntime:
    """Drives the three phases against one set of agent profiles.

    All chat exchanges performed are collected for session auditability.
    """

    def __init__(
        self,
        profiles: dict[AgentRole, AgentProfile],
        script: Optional[MockScript] = None,
        clock: Optional[Callable[[], float]] = None,
        concurrent_elicitation: bool = True,
    ) -> None:
        missing = set(AgentRole) - set(profiles)
        if missing:
            raise ValueError(f"missing agent profiles: {sorted(r.value for r in missing)}")
        self.profiles = profiles
        self.script = script
        self.clock = clock or _wall_clock
        self.concurrent_elicitation = concurrent_elicitation
        self.exchanges: list[tuple[str, AgentRole, ChatExchange]] = []
        self._clients = {
            role: LlmClient(profile.model_ref, script=script)
            for role, profile in profiles.items()
        }

    def _chat(self, role: AgentRole, phase: str, user_prompt: str, extra=None) -> ChatExchange:
        messages = [Message("system", self.profiles[role].system_prompt)]
        messages.append(Message("user", user_prompt))
        if extra:
            messages.extend(extra)
        exchange = self._clients[role].chat(messages)
        self.exchanges.append((phase, role, exchange))
        return exchange

    def _chat_parsed(self, role, phase, user_prompt, parse):
        """One corrective retry on parse failure, then hard failure."""
        exchange = self._chat(role, phase, user_prompt)
        outcome = parse(exchange.response_text)
        if outcome.is_ok:
            return outcome.value, exchange
        corrective = (
            "Your previous reply could not be parsed. Problems: "
            + "; ".join(f"{path}: {reason}" for path, reason in outcome.violations)
            + ". Reply again with exactly one valid fenced JSON object."
        )
        retry = self._chat(
            role,
            phase,
            user_prompt,
            extra=[
                Message("assistant", exchange.response_text),
                Message("user", corrective),
            ],
        )
        outcome = parse(retry.response_text)
        if outcome.is_ok:
            return outcome.value, retry
        raise ParsePhaseError(phase, outcome.violations)

    # -- phase 1: generation ------------------------------------------------

    def run_generation(
        self, project: ProjectDescription
    ) -> tuple[parsing.GenerationResult, ChatExchange]:
        project.validate()
        prompt = render_prompt(
            load_template("generation_request"),
            {"project_description": project.body},
        )
        result, exchange = self._chat_parsed(
            AgentRole.PRODUCT_OWNER, "generation", prompt, parsing.parse_generation
        )
        return result, exchange

    # -- phase 2: quality ---------------------------------------------------

    def run_quality(self, stories: Sequence[UserStory]) -> tuple[list[quality.QualityReport], list[UserStory]]:
        if not stories:
            raise ValueError("stories must be non-empty")
        template = load_template("quality_request")
        reports = []
        checked = []
        for story in stories:
            lint = quality.lint_story(story, stories)
            prompt = render_prompt(
                template,
                {
                    "framework": QUALITY_FRAMEWORK,
                    "story_json": json.dumps(
                        {
                            "story_id": story.id,
                            "title": story.title,
                            "epic": story.epic,
                            "description": story.description,
                            "acceptance_criteria": list(story.acceptance_criteria),
                        },
                        indent=2,
                    ),
                },
            )
            verdict, _ = self._chat_parsed(
                AgentRole.QUALITY_ASSURANCE,
                "quality",
                prompt,
                lambda reply, sid=story.id: parsing.parse_quality_verdict(reply, sid),
            )
            reports.append(quality.combine(lint, verdict))
            checked.append(story.with_status(StoryStatus.QUALITY_CHECKED))
        return reports, checked

    # -- phase 3: prioritization meeting -------------------------------------

    def run_prioritization_meeting(
        self,
        stories: Sequence[UserStory],
        technique: PrioritizationTechnique,
    ) -> tuple[RankedBacklog, MeetingTranscript, list[parsing.ScoreSheet]]:
        if len(stories) < 2:
            raise ValueError("at least two stories required for prioritization")
        story_ids = [s.id for s in stories]
        payload = stories_payload(stories)
        events: list[MeetingEvent] = []

        opening = self._chat(
            AgentRole.PRODUCT_OWNER,
            "prioritization",
            render_prompt(
                load_template("meeting_open"),
                {"technique": technique.value, "stories_json": payload},
            ),
        )
        events.append(
            MeetingEvent(
                speaker=AgentRole.PRODUCT_OWNER,
                phase="prioritization",
                content=opening.response_text,
                timestamp=self.clock(),
            )
        )

        sheet_template = load_template("sheet_request")
        sheet_prompt = render_prompt(
            sheet_template,
            {
                "technique": technique.value,
                "technique_instructions": TECHNIQUE_INSTRUCTIONS[technique],
                "stories_json": payload,
            },
        )

        def elicit(role: AgentRole) -> tuple[AgentRole, parsing.ScoreSheet, ChatExchange]:
            sheet, exchange = self._chat_parsed(
                role,
                "prioritization",
                sheet_prompt,
                lambda reply: parsing.parse_score_sheet(reply, technique, story_ids, role),
            )
            return role, sheet, exchange

        voters = [AgentRole.PRODUCT_OWNER, AgentRole.QUALITY_ASSURANCE, AgentRole.SENIOR_DEVELOPER]
        results: dict[AgentRole, tuple[parsing.ScoreSheet, ChatExchange]] = {}
        po_role, po_sheet, po_exchange = elicit(AgentRole.PRODUCT_OWNER)
        results[po_role] = (po_sheet, po_exchange)
        concurrent_roles = [AgentRole.QUALITY_ASSURANCE, AgentRole.SENIOR_DEVELOPER]
        if self.concurrent_elicitation:
            with ThreadPoolExecutor(max_workers=2) as pool:
                for role, sheet, exchange in pool.map(elicit, concurrent_roles):
                    results[role] = (sheet, exchange)
        else:
            for role in concurrent_roles:
                _, sheet, exchange = elicit(role)
                results[role] = (sheet, exchange)

        sheets = [results[role][0] for role in voters]
        for role in voters:
            events.append(
                MeetingEvent(
                    speaker=role,
                    phase="prioritization",
                    content=results[role][1].response_text,
                    timestamp=self.clock(),
                )
            )

        dialogue = "\n\n".join(
            f"{e.speaker.value}: {e.content}" for e in events
        )
        manager_prompt = render_prompt(
            load_template("manager_request"),
            {
                "technique": technique.value,
                "dialogue": dialogue,
                "sheets_json": json.dumps([_sheet_payload(s) for s in sheets], indent=2),
                "stories_json": payload,
            },
        )
        manager_exchange = self._chat(AgentRole.MANAGER, "merge", manager_prompt)
        outcome = parsing.parse_manager_ranking(manager_exchange.response_text, story_ids)

        if outcome.is_ok:
            scores, justifications = outcome.value
            entries = prioritization.ranks_from_scores(
                scores, descending=True, justifications=justifications
            )
            events.append(
                MeetingEvent(
                    speaker=AgentRole.MANAGER,
                    phase="merge",
                    content=manager_exchange.response_text,
                    timestamp=self.clock(),
                )
            )
        else:
            entries = self._fallback_merge(technique, sheets)
            events.append(
                MeetingEvent(
                    speaker=AgentRole.MANAGER,
                    phase="merge",
                    content=(
                        "Manager reply was unparseable; falling back to the "
                        "deterministic average-rank merge of the agent sheets."
                    ),
                    timestamp=self.clock(),
                )
            )

        backlog = RankedBacklog(technique=technique, entries=tuple(entries))
        transcript = MeetingTranscript(technique=technique, events=tuple(events))
        return backlog, transcript, sheets

    @staticmethod
    def _fallback_merge(
        technique: PrioritizationTechnique, sheets: Sequence[parsing.ScoreSheet]
    ) -> tuple[RankEntry, ...]:
        """Per-agent technique scores -> per-agent rankings -> Borda merge.

        The entry score is n+1-mean_rank so that higher still means better."""
        vectors = []
        for sheet in sheets:
            scores = prioritization.score_sheets(technique, [sheet])
            entries = prioritization.ranks_from_scores(scores)
            vectors.append(
                RankingVector(
                    ranks={e.story_id: e.rank for e in entries},
                    source=sheet.agent.value,
                )
            )
        merged = merge_borda(vectors)
        n = len(merged.ranks)
        scores = {sid: n + 1 - rank for sid, rank in merged.ranks.items()}
        return prioritization.ranks_from_scores(
            scores,
            descending=True,
            justifications={sid: "deterministic merge fallback" for sid in scores},
        )


def _wall_clock() -> float:
    import time

    return time.time()


class FrozenClock:
    """Deterministic clock for reproducible artifacts: 0, 1, 2, ..."""

    def __init__(self, start: float = 0.0) -> None:
        self._next = start

    def __call__(self) -> float:
        value = self._next
        self._next += 1.0
        return value
