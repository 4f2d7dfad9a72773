import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/client.js";
import { renderBacklog, renderSession, renderTranscript } from "../src/render.js";
import { applyEvent, emptyView, foldEvents } from "../src/state.js";
import type { SessionEvent } from "../src/types.js";
import { startServer, type TestServer } from "./server.js";

let server: TestServer;
let client: ApiClient;
let sessionId: string;
let events: SessionEvent[];

async function collect(from = 0): Promise<SessionEvent[]> {
  const out: SessionEvent[] = [];
  for await (const event of client.streamEvents(sessionId, from)) out.push(event);
  return out;
}

beforeAll(async () => {
  server = await startServer(8700 + Math.floor(Math.random() * 200));
  client = new ApiClient(server.baseUrl);
  sessionId = await client.createSession({ fixture: "p1_gpt35" });
  events = await collect();
}, 60_000);

afterAll(async () => {
  await server.stop();
});

describe("event stream", () => {
  it("delivers a strictly increasing, terminal-ended sequence", () => {
    const seqs = events.map((e) => e.sequence_no);
    expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
    expect(new Set(seqs).size).toBe(seqs.length);
    expect(events.at(-1)?.kind).toBe("metrics_ready");
  });

  it("resumes from an offset without duplicates", async () => {
    const cut = Math.floor(events.length / 2);
    const resumed = await collect(events[cut]!.sequence_no);
    expect(resumed).toEqual(events.slice(cut));
  });
});

describe("session view", () => {
  it("renders the full transcript in stream order", () => {
    const view = foldEvents(events);
    const expected = events
      .filter((e) => e.kind === "agent_message")
      .map((e) => [e.sequence_no, e.payload["speaker"], e.payload["content"]]);
    expect(
      view.transcript.map((l) => [l.sequence_no, l.speaker, l.content]),
    ).toEqual(expected);

    const html = renderTranscript(view);
    const order = [...html.matchAll(/data-seq="(\d+)"/g)].map((m) => Number(m[1]));
    expect(order).toEqual(expected.map(([seq]) => seq));
    expect(order.length).toBeGreaterThan(0);
  });

  it("shows tie ranks exactly as the backend formats them", () => {
    const view = foldEvents(events);
    const hundred = view.backlogs.find((b) => b.technique === "100dollar");
    expect(hundred).toBeDefined();
    const tied = hundred!.entries.filter((e) => e.rank === "1.5");
    expect(tied.length).toBe(2);
    const html = renderBacklog(hundred!);
    expect(html).toContain('<td class="rank">1.5</td>');
  });

  it("collects stories, quality, three backlogs, and metrics", () => {
    const view = foldEvents(events);
    expect(view.stories).toHaveLength(11);
    expect(view.quality).toHaveLength(11);
    expect(view.backlogs.map((b) => b.technique).sort()).toEqual([
      "100dollar",
      "ahp",
      "wsjf",
    ]);
    expect(view.metrics?.distinct_epics).toBe(11);
    expect(view.done).toBe(true);
    expect(renderSession(view)).toContain('class="metrics"');
  });

  it("folds incrementally to the same view as a single pass", () => {
    let incremental = emptyView();
    for (const event of events) incremental = applyEvent(incremental, event);
    expect(incremental).toEqual(foldEvents(events));
  });
});

describe("csv download", () => {
  it("is byte-identical to the server export", async () => {
    const viaClient = await client.downloadBacklogCsv(sessionId, "100dollar");
    const direct = new Uint8Array(
      await (
        await fetch(`${server.baseUrl}/sessions/${sessionId}/backlog.csv?technique=100dollar`)
      ).arrayBuffer(),
    );
    expect(Buffer.from(viaClient).equals(Buffer.from(direct))).toBe(true);
    const text = new TextDecoder().decode(viaClient);
    expect(text.startsWith("rank,story_id,epic,title,description")).toBe(true);
    expect(text).toContain("\r\n");
    expect(text.split("\r\n")[1]?.startsWith("1.5,")).toBe(true);
  });
});

describe("feedback", () => {
  it("submits a practitioner entry retrievable via REST", async () => {
    const id = await client.submitFeedback(sessionId, {
      practitioner_role: "product owner",
      experience: "6 years",
      satisfaction: "good",
      comment: "priorities matched our sprint planning",
      suggestion: "let me pin a story to rank 1",
    });
    expect(id).toBeTruthy();
    const entries = await client.listFeedback(sessionId);
    expect(entries).toHaveLength(1);
    expect(entries[0]).toMatchObject({
      practitioner_role: "product owner",
      satisfaction: "good",
    });
  });

  it("rejects an out-of-scale satisfaction value", async () => {
    await expect(
      client.submitFeedback(sessionId, {
        practitioner_role: "dev",
        experience: "",
        satisfaction: "ecstatic",
        comment: "",
        suggestion: "",
      }),
    ).rejects.toThrow(/422/);
  });
});
