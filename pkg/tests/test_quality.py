import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from storyagents.parsing import QaVerdict
from storyagents.quality import (
    DEFAULT_CONFIG,
    LintConfig,
    QualityReport,
    combine,
    lint_story,
)

from conftest import make_story


def lint(story, extra=()):
    return lint_story(story, [story, *extra])


class TestRuleTable:
    def test_well_formed_story_passes_everything(self):
        report = lint(make_story())
        assert report.overall_pass
        assert all(r.passed for r in report.invest.values())
        assert all(r.passed for r in report.iso29148.values())

    def test_independent_fails_on_story_reference(self):
        report = lint(make_story(activity="reset password after story US-002 lands"))
        assert not report.invest["I"].passed

    def test_independent_fails_on_depends_on(self):
        report = lint(make_story(activity="do this, which depends on billing"))
        assert not report.invest["I"].passed

    def test_negotiable_fails_on_product_names(self):
        report = lint(make_story(activity="store sessions using PostgreSQL and React"))
        assert not report.invest["N"].passed

    def test_valuable_fails_on_missing_goal(self):
        report = lint(make_story(goal=""))
        assert not report.invest["V"].passed
        assert report.invest["V"].reason == "no so-that clause"
        assert report.iso29148["unambiguous"].passed

    def test_estimable_fails_on_long_activity(self):
        report = lint(make_story(activity="do a thing " * 11))
        assert not report.invest["E"].passed

    def test_small_fails_on_long_description(self):
        report = lint(make_story(goal="achieve a goal " * 20))
        assert not report.invest["S"].passed

    def test_small_fails_on_too_many_criteria(self):
        report = lint(make_story(acceptance_criteria=tuple(f"Display item {i}" for i in range(8))))
        assert not report.invest["S"].passed

    def test_testable_fails_without_criteria(self):
        report = lint(make_story(acceptance_criteria=()))
        assert not report.invest["T"].passed
        assert not report.iso29148["verifiable"].passed

    def test_testable_fails_without_verifiable_verb(self):
        report = lint(make_story(acceptance_criteria=("it should be nice",)))
        assert not report.invest["T"].passed

    def test_unambiguous_fails_on_hedge_words(self):
        report = lint(make_story(goal="handle errors and/or warnings"))
        assert not report.iso29148["unambiguous"].passed

    def test_singular_fails_on_multiple_ands(self):
        report = lint(
            make_story(activity="log in and browse items and export reports")
        )
        assert not report.iso29148["singular"].passed

    def test_complete_fails_without_epic(self):
        report = lint(make_story(epic=""))
        assert not report.iso29148["complete"].passed

    def test_story_must_belong_to_set(self):
        with pytest.raises(ValueError):
            lint_story(make_story(), [make_story(sid="US-099")])

    def test_pure_function(self):
        s = make_story()
        assert lint(s) == lint(s)


def all_pass_verdict(sid="US-001"):
    return QaVerdict(
        story_id=sid,
        verdicts={l: (True, "ok") for l in "INVEST"},
        raw_text="{}",
    )


class TestCombine:
    def test_both_pass(self):
        report = combine(lint(make_story()), all_pass_verdict())
        assert report.overall_pass
        assert report.llm_verdict == "{}"

    def test_llm_failure_fails_letter(self):
        verdict = all_pass_verdict()
        verdict.verdicts["S"] = (False, "too broad")
        report = combine(lint(make_story()), verdict)
        assert not report.invest["S"].passed
        assert "too broad" in report.invest["S"].reason
        assert not report.overall_pass

    def test_lint_failure_survives_llm_pass(self):
        report = combine(lint(make_story(goal="")), all_pass_verdict())
        assert not report.invest["V"].passed

    def test_id_mismatch(self):
        with pytest.raises(ValueError):
            combine(lint(make_story()), all_pass_verdict(sid="US-002"))

    def test_failure_is_commutative_in_source(self):
        # a letter fails iff it fails in at least one source
        verdict = all_pass_verdict()
        verdict.verdicts["N"] = (False, "mandates a stack")
        lint_fail = lint(make_story(goal=""))
        report = combine(lint_fail, verdict)
        assert not report.invest["V"].passed
        assert not report.invest["N"].passed


class TestConfig:
    def test_from_file(self, tmp_path):
        path = tmp_path / "lint.json"
        path.write_text(json.dumps({"max_criteria": 2, "hedge_words": ["maybe"]}))
        config = LintConfig.from_file(path)
        assert config.max_criteria == 2
        assert config.hedge_words == ("maybe",)
        report = lint_story(
            make_story(acceptance_criteria=("Display a", "Display b", "Display c")),
            [make_story(acceptance_criteria=("Display a", "Display b", "Display c"))],
            config,
        )
        assert not report.invest["S"].passed


verb_criteria = st.lists(
    st.sampled_from(["Display the result", "Validate the form", "plain words only", ""]),
    min_size=0,
    max_size=6,
)


@given(verb_criteria, st.text(max_size=30))
def test_testable_monotonic_under_added_criteria(criteria, extra):
    base = make_story(acceptance_criteria=tuple(c for c in criteria if c))
    grown = make_story(acceptance_criteria=base.acceptance_criteria + (extra,))
    t_before = lint(base).invest["T"].passed
    t_after = lint(grown).invest["T"].passed
    if t_before:
        assert t_after
