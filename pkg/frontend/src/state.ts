import type {
  BacklogOut,
  MetricsOut,
  QualityReportOut,
  SessionEvent,
  StoryOut,
  TranscriptLine,
} from "./types.js";

/** Accumulated view of one session, built purely by folding stream events.
 * No values are recomputed client-side. */
export interface SessionView {
  phase: string;
  transcript: TranscriptLine[];
  stories: StoryOut[];
  quality: QualityReportOut[];
  backlogs: BacklogOut[];
  metrics: MetricsOut | null;
  error: string | null;
  done: boolean;
}

export function emptyView(): SessionView {
  return {
    phase: "",
    transcript: [],
    stories: [],
    quality: [],
    backlogs: [],
    metrics: null,
    error: null,
    done: false,
  };
}

export function applyEvent(view: SessionView, event: SessionEvent): SessionView {
  const payload = event.payload;
  switch (event.kind) {
    case "phase_started":
      return { ...view, phase: String(payload["phase"] ?? "") };
    case "agent_message":
      return {
        ...view,
        transcript: [
          ...view.transcript,
          {
            sequence_no: event.sequence_no,
            phase: String(payload["phase"] ?? ""),
            speaker: String(payload["speaker"] ?? ""),
            content: String(payload["content"] ?? ""),
            technique: payload["technique"] as string | undefined,
          },
        ],
      };
    case "stories_ready":
      return { ...view, stories: payload["stories"] as StoryOut[] };
    case "quality_ready":
      return { ...view, quality: payload["reports"] as QualityReportOut[] };
    case "backlog_ready":
      return { ...view, backlogs: [...view.backlogs, payload as unknown as BacklogOut] };
    case "metrics_ready":
      return { ...view, metrics: payload as unknown as MetricsOut, done: true };
    case "error":
      return { ...view, error: String(payload["detail"] ?? payload["error"]), done: true };
    default:
      return view;
  }
}

export function foldEvents(events: Iterable<SessionEvent>): SessionView {
  let view = emptyView();
  for (const event of events) view = applyEvent(view, event);
  return view;
}
