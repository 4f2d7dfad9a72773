import pytest

from storyagents.agents import FrozenClock

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.failed or (report.when == "call" and report.passed):
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{outcome}: {name}")
from storyagents.domain import PrioritizationTechnique, UserStory
from storyagents.fixture_loader import load_packaged_fixture
from storyagents.pipeline import run_pipeline


def make_story(sid="US-001", **overrides) -> UserStory:
    base = dict(
        id=sid,
        epic="Accounts",
        title="Password reset",
        role="registered user",
        activity="reset my password from the login page",
        goal="I can regain access to my account",
        acceptance_criteria=(
            "Send a reset link to the registered email",
            "Reject expired reset tokens",
        ),
    )
    base.update(overrides)
    return UserStory(**base)


@pytest.fixture(scope="session")
def p1_gpt35_session():
    bundle = load_packaged_fixture("p1_gpt35")
    return run_pipeline(
        session_id="p1_gpt35",
        project=bundle.project,
        config=bundle.config,
        techniques=bundle.techniques,
        script=bundle.script,
        embedder=bundle.embedder,
        clock=FrozenClock(),
    )
