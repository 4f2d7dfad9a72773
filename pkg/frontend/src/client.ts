import { readNdjson } from "./ndjson.js";
import type { FeedbackIn, SessionEvent } from "./types.js";

export interface CreateSessionRequest {
  fixture?: string;
  project?: { title: string; body: string };
  techniques?: string[];
  model?: string;
  provider?: string;
}

/** Thin fetch wrapper over the session service. Delivery on the event
 * stream is at-least-once, so `streamEvents` dedups by sequence_no and can
 * resume from the last sequence seen. */
export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async checked(resp: Response): Promise<Response> {
    if (!resp.ok) {
      const detail = await resp.text();
      throw new Error(`${resp.status} ${resp.statusText}: ${detail}`);
    }
    return resp;
  }

  async createSession(request: CreateSessionRequest): Promise<string> {
    const resp = await this.checked(
      await fetch(this.url("/sessions"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
      }),
    );
    const data = (await resp.json()) as { id: string };
    return data.id;
  }

  async getSession(id: string): Promise<Record<string, unknown>> {
    const resp = await this.checked(await fetch(this.url(`/sessions/${id}`)));
    return (await resp.json()) as Record<string, unknown>;
  }

  /** Stream events from `from` until the terminal event, skipping any
   * sequence number already delivered. */
  async *streamEvents(id: string, from = 0): AsyncGenerator<SessionEvent> {
    let next = from;
    const seen = new Set<number>();
    const resp = await this.checked(
      await fetch(this.url(`/sessions/${id}/events?from=${next}`)),
    );
    if (!resp.body) throw new Error("event stream has no body");
    for await (const raw of readNdjson(resp.body)) {
      const event = raw as SessionEvent;
      if (seen.has(event.sequence_no)) continue;
      seen.add(event.sequence_no);
      next = event.sequence_no + 1;
      yield event;
    }
  }

  async downloadBacklogCsv(
    id: string,
    technique: string,
  ): Promise<Uint8Array<ArrayBuffer>> {
    const resp = await this.checked(
      await fetch(this.url(`/sessions/${id}/backlog.csv?technique=${technique}`)),
    );
    return new Uint8Array(await resp.arrayBuffer());
  }

  async submitFeedback(id: string, feedback: FeedbackIn): Promise<string> {
    const resp = await this.checked(
      await fetch(this.url(`/sessions/${id}/feedback`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(feedback),
      }),
    );
    const data = (await resp.json()) as { id: string };
    return data.id;
  }

  async listFeedback(id: string): Promise<Record<string, unknown>[]> {
    const resp = await this.checked(
      await fetch(this.url(`/sessions/${id}/feedback`)),
    );
    const data = (await resp.json()) as { entries: Record<string, unknown>[] };
    return data.entries;
  }
}
