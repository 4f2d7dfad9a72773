"""storyagents: multi-agent backlog engine.

Turns a free-text project description into epics and user stories via a
four-agent LLM protocol, lints story quality (INVEST + ISO 29148 subset),
prioritizes with Hundred-Dollar, WSJF, and AHP, merges agent rankings, and
measures each run (latency, distinct counts, semantic similarity).
"""

__version__ = "0.1.0"
