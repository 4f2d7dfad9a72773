import { ApiClient } from "./client.js";
import { applyEvent, emptyView } from "./state.js";
import { renderSession } from "./render.js";
import type { FeedbackIn } from "./types.js";

/** Browser entry point: start a session from the form, live-render the
 * stream, and wire up CSV download plus the feedback form. */
export async function mount(root: HTMLElement, baseUrl: string): Promise<void> {
  const client = new ApiClient(baseUrl);
  const form = root.querySelector<HTMLFormElement>("#start-form");
  const output = root.querySelector<HTMLElement>("#session");
  if (!form || !output) throw new Error("expected #start-form and #session");

  form.addEventListener("submit", async (submit) => {
    submit.preventDefault();
    const data = new FormData(form);
    const sessionId = await client.createSession({
      project: {
        title: String(data.get("title") ?? ""),
        body: String(data.get("body") ?? ""),
      },
      techniques: String(data.get("techniques") ?? "100dollar,wsjf,ahp")
        .split(",")
        .map((t) => t.trim())
        .filter(Boolean),
    });

    let view = emptyView();
    for await (const event of client.streamEvents(sessionId)) {
      view = applyEvent(view, event);
      output.innerHTML = renderSession(view);
    }

    for (const backlog of view.backlogs) {
      const button = document.createElement("button");
      button.textContent = `Download ${backlog.technique} CSV`;
      button.addEventListener("click", async () => {
        const bytes = await client.downloadBacklogCsv(sessionId, backlog.technique);
        const link = document.createElement("a");
        link.href = URL.createObjectURL(new Blob([bytes], { type: "text/csv" }));
        link.download = `backlog_${backlog.technique}.csv`;
        link.click();
        URL.revokeObjectURL(link.href);
      });
      output.append(button);
    }

    const feedbackForm = root.querySelector<HTMLFormElement>("#feedback-form");
    feedbackForm?.addEventListener("submit", async (fb) => {
      fb.preventDefault();
      const entries = new FormData(feedbackForm);
      const feedback: FeedbackIn = {
        practitioner_role: String(entries.get("practitioner_role") ?? ""),
        experience: String(entries.get("experience") ?? ""),
        satisfaction: String(entries.get("satisfaction") ?? ""),
        comment: String(entries.get("comment") ?? ""),
        suggestion: String(entries.get("suggestion") ?? ""),
      };
      await client.submitFeedback(sessionId, feedback);
    });
  });
}
