#!/usr/bin/env python3
"""Regenerate the recorded-run fixture bundles under src/storyagents/fixtures/.

Each bundle scripts the generation reply (with its recorded latency) and the
manager rankings for one model run, and records embeddings such that every
story's cosine against the project body equals the run's reported mean
similarity. Quality verdicts, meeting openings, and agent score sheets fall
through to the deterministic mock synthesizer.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "storyagents" / "fixtures"

PROJECTS = {
    "P1": {
        "id": "P1",
        "title": "FEMMa Oracle",
        "body": (
            "Build an AI assistant for the FEMMa research programme on future "
            "electrified mobile machines. The assistant answers questions about the "
            "programme through a chat-style interface, draws on material collected "
            "from the programme wiki stored in a vector database, and ships as a "
            "backend service plus a web frontend, with a first prototype due in "
            "early August. Important themes include programme objectives, data "
            "collection and analysis, key findings, funding, industry impact, and "
            "practical applications of the research."
        ),
    },
    "P2": {
        "id": "P2",
        "title": "Supplier Data Management Platform",
        "body": (
            "Create a platform that manages and compares catalogue data from more "
            "than five hundred vendors. It extracts offers from PDF price lists, "
            "translates and structures the content for language-model analysis, "
            "and stores everything in a document database. Teams use it to compare "
            "supplier rates, analyse ingredient and recipe costs, and get real-time "
            "insight into supplier offerings, with a working demo due in late July."
        ),
    },
    "P3": {
        "id": "P3",
        "title": "CV Analysis System",
        "body": (
            "Develop a web application that parses and ranks submitted CVs against "
            "the criteria of a job campaign. HR staff create campaigns with job "
            "descriptions, applicants upload CVs, the system parses them, stores "
            "the results in a vector database, and returns a ranked shortlist. A "
            "chat assistant answers recruiter questions about the candidate pool "
            "in real time."
        ),
    },
    "P4": {
        "id": "P4",
        "title": "Tampere City RAG Application",
        "body": (
            "Deliver a retrieval-augmented chatbot that answers questions about "
            "the Finnish land use and construction rules in Finnish. Source "
            "material from legislation, city planning, and building permit sites "
            "is scraped, translated for internal use, structured, and stored in a "
            "vector database. The chatbot is deployed on the city website and "
            "handles practical questions such as whether felling a tree on one's "
            "own plot needs a permit."
        ),
    },
}


def story(epic, title, role, activity, goal, criteria=None):
    return {
        "epic": epic,
        "title": title,
        "role": role,
        "activity": activity,
        "goal": goal,
        "acceptance_criteria": criteria
        or [f"Display the {title.lower()} outcome", f"Validate {title.lower()} input"],
    }


def p1_story_set():
    """11 one-story epics mirroring the themes the recorded run produced."""
    themes = [
        ("Data Analysis", "researcher", "analyse collected programme data", "trends in the research are visible"),
        ("Research Findings", "researcher", "browse summarized research findings", "I can reuse results quickly"),
        ("Funding", "programme manager", "track funding sources and budgets", "spending stays transparent"),
        ("Industry Impact", "stakeholder", "review industry impact summaries", "practical value is clear"),
        ("Main Objectives", "stakeholder", "see the main objectives of the programme", "work aligns with goals"),
        ("Key Findings", "researcher", "highlight key findings per work package", "important results stand out"),
        ("Practical Applications", "engineer", "explore practical applications of results", "research transfers to products"),
        ("UI/UX Design", "user", "use a familiar chat-style interface", "asking questions feels natural"),
        ("Data Integration", "developer", "integrate wiki content into the vector store", "answers stay grounded"),
        ("Backend Development", "developer", "query the assistant through a stable API", "the frontend stays simple"),
        ("Data Collection", "researcher", "collect programme material automatically", "the knowledge base stays fresh"),
    ]
    return [story(t[0], t[0], t[1], t[2], t[3]) for t in themes]


def grouped_story_set(epics, per_epic, prefix_roles=("user", "developer", "analyst")):
    out = []
    for i, epic in enumerate(epics):
        for j in range(per_epic):
            title = f"{epic} Story {j + 1}"
            role = prefix_roles[j % len(prefix_roles)]
            out.append(
                story(
                    epic,
                    title,
                    role,
                    f"work with {epic.lower()} capability {j + 1}",
                    f"the {epic.lower()} workflow improves",
                )
            )
    return out


def generation_payload(stories):
    epics = {}
    for s in stories:
        epics.setdefault(s["epic"], []).append(
            {k: s[k] for k in ("title", "role", "activity", "goal", "acceptance_criteria")}
        )
    payload = {"epics": [{"name": name, "stories": items} for name, items in epics.items()]}
    return "```json\n" + json.dumps(payload, indent=2) + "\n```"


def description_of(s):
    return f"As a {s['role']}, I want {s['activity']}, so that {s['goal']}."


def embeddings_for(project_body, stories, similarity):
    emb = {project_body: [1.0, 0.0]}
    y = math.sqrt(max(0.0, 1.0 - similarity * similarity))
    for s in stories:
        emb[description_of(s)] = [similarity, y]
    return emb


def manager_rule(technique_value, scores, note):
    rows = [
        {"story_id": sid, "score": score, "justification": f"{note} ({sid})"}
        for sid, score in scores
    ]
    return {
        "contains": ['"ranking"', f"technique {technique_value} has concluded"],
        "response": "```json\n" + json.dumps({"ranking": rows}, indent=2) + "\n```",
        "latency_s": 0.0,
    }


def bundle(name, project_key, model_name, stories, latency_s, similarity,
           techniques, manager_rules=()):
    project = PROJECTS[project_key]
    script = [
        {
            "contains": ['"epics"'],
            "response": generation_payload(stories),
            "latency_s": latency_s,
        },
        *manager_rules,
    ]
    data = {
        "name": name,
        "project": project,
        "model_name": model_name,
        "techniques": techniques,
        "script": script,
        "embeddings": embeddings_for(project["body"], stories, similarity),
    }
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(stories)} stories)")


def ids(n):
    return [f"US-{i + 1:03d}" for i in range(n)]


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    # Project 1, GPT-3.5: 11 epics / 11 stories, 5.90 s, 0.57.
    # Ranking patterns follow the recorded run: $100 ties Data Analysis and
    # Research Findings at 1.5; WSJF puts Funding first; AHP ties Industry
    # Impact and Funding at 1.5.
    p1 = p1_story_set()
    sid = dict(zip([s["title"] for s in p1], ids(len(p1))))
    hundred = [
        (sid["Data Analysis"], 20),
        (sid["Research Findings"], 20),
        (sid["Funding"], 12),
        (sid["Industry Impact"], 10),
        (sid["Main Objectives"], 9),
        (sid["Key Findings"], 8),
        (sid["Practical Applications"], 7),
        (sid["UI/UX Design"], 6),
        (sid["Data Integration"], 4),
        (sid["Backend Development"], 3),
        (sid["Data Collection"], 1),
    ]
    wsjf = [
        (sid["Funding"], 9.0),
        (sid["Data Analysis"], 7.5),
        (sid["Main Objectives"], 6.0),
        (sid["Research Findings"], 5.5),
        (sid["Industry Impact"], 5.0),
        (sid["Key Findings"], 4.5),
        (sid["Practical Applications"], 4.0),
        (sid["UI/UX Design"], 3.5),
        (sid["Data Integration"], 3.0),
        (sid["Backend Development"], 2.5),
        (sid["Data Collection"], 2.0),
    ]
    ahp = [
        (sid["Industry Impact"], 0.18),
        (sid["Funding"], 0.18),
        (sid["Practical Applications"], 0.14),
        (sid["Data Analysis"], 0.11),
        (sid["Research Findings"], 0.09),
        (sid["Main Objectives"], 0.08),
        (sid["Key Findings"], 0.07),
        (sid["UI/UX Design"], 0.05),
        (sid["Data Integration"], 0.04),
        (sid["Backend Development"], 0.03),
        (sid["Data Collection"], 0.03),
    ]
    bundle(
        "p1_gpt35", "P1", "gpt-3.5", p1, 5.90, 0.57,
        ["100dollar", "wsjf", "ahp"],
        manager_rules=[
            manager_rule("HundredDollar", hundred, "consensus allocation"),
            manager_rule("WSJF", wsjf, "cost-of-delay consensus"),
            manager_rule("AHP", ahp, "pairwise-importance consensus"),
        ],
    )

    # Project 1, GPT-4o: 6 epics / 18 stories, 16.00 s, 0.44.
    p1_gpt4o = grouped_story_set(
        ["Main Objectives", "Key Findings", "Practical Applications",
         "UI/UX Design", "Data Integration", "Backend Development"],
        per_epic=3,
    )
    bundle("p1_gpt4o", "P1", "gpt-4o", p1_gpt4o, 16.00, 0.44, ["100dollar"])

    # Project 1, Llama: 5 epics, 3.23 s, 0.38.
    p1_llama = grouped_story_set(
        ["Interact with AI", "Pre-select Prompts", "Deploy MVP", "Embed Data", "Source Citation"],
        per_epic=1,
    )
    bundle("p1_llama", "P1", "llama3-70", p1_llama, 3.23, 0.38, ["100dollar"])

    # Project 1, Mixtral: 9 epics, 1.88 s, 0.36.
    p1_mixtral = grouped_story_set(
        ["Project Overview", "Key Findings", "Funding", "Data Collection", "Source Citation",
         "UI Design", "Vector Store", "Backend API", "Frontend"],
        per_epic=1,
    )
    bundle("p1_mixtral", "P1", "mixtral-8b", p1_mixtral, 1.88, 0.36, ["100dollar"])

    # Projects 2-4, GPT-3.5 runs (epics/stories/latency/similarity per run).
    p2 = grouped_story_set(
        ["PDF Data Extraction", "Translation", "LLM Integration",
         "Supplier Rate Comparison", "Historical Data Analysis", "Deep Data Analysis"],
        per_epic=1,
    )
    p2.append(
        story(
            "Deep Data Analysis",
            "Recipe Cost Calculation",
            "analyst",
            "calculate full recipe costs from supplier data",
            "procurement decisions use real prices",
        )
    )
    bundle("p2_gpt35", "P2", "gpt-3.5", p2, 5.91, 0.72, ["100dollar", "wsjf", "ahp"])

    p3 = grouped_story_set(
        ["Campaign Setup", "CV Upload", "CV Parsing", "Candidate Ranking", "Recruiter Chat"],
        per_epic=1,
    )
    bundle("p3_gpt35", "P3", "gpt-3.5", p3, 10.55, 0.65, ["100dollar"])

    p4 = grouped_story_set(
        ["Web Scraping", "Translation Pipeline", "Data Structuring", "Vector Storage",
         "Chatbot Core", "Permit Questions", "City Website Deployment", "Answer Quality"],
        per_epic=1,
    )
    bundle("p4_gpt35", "P4", "gpt-3.5", p4, 9.55, 0.71, ["100dollar"])


if __name__ == "__main__":
    main()
