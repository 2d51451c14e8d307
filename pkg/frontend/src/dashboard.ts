/** Review dashboard: records grouped by live stage with provenance digests
 * and changed-field summaries. Publish/delete appear for accredited sessions
 * only; deleting an ever-published record is permanently disabled. */

import { api, RecordListEntry, SessionInfo } from "./api.js";
import { clear, el } from "./dom.js";

export interface DashboardOptions {
  templateId: string;
  resourceName: string;
  onChanged?: () => void;
}

function digest(entry: RecordListEntry): HTMLElement {
  const items = entry.history.map((activity) =>
    el("li", {}, `${activity.kind} by ${activity.agent} at ${activity.at}`),
  );
  const block = el("details", { class: "prov-digest" },
    el("summary", {}, `history (${entry.history.length})`),
    el("ul", {}, ...items));
  if (entry.changed_fields.length) {
    block.append(el("div", { class: "changed-fields" },
      `changed since publication: ${entry.changed_fields.join(", ")}`));
  }
  return block;
}

export async function renderDashboard(root: HTMLElement, opts: DashboardOptions): Promise<void> {
  clear(root);
  const [session, records] = await Promise.all([
    api<SessionInfo>("/api/session"),
    api<RecordListEntry[]>(`/api/records?${new URLSearchParams({ template: opts.templateId })}`),
  ]);

  root.append(el("h2", {}, "Review dashboard"));
  if (!session.authenticated) {
    root.append(
      el("p", { class: "session-note" },
        "anonymous session — sign in to review; actions are hidden"),
    );
  } else if (!session.accredited) {
    root.append(
      el("p", { class: "session-note" },
        `signed in as ${session.user_id} (not accredited: publishing is reserved for collaborators)`),
    );
  } else {
    root.append(el("p", { class: "session-note" }, `reviewing as ${session.user_id}`));
  }

  const table = el("table", { class: "dashboard" });
  table.append(
    el("tr", {},
      el("th", {}, "Record"),
      el("th", {}, "Stage"),
      el("th", {}, "Last change"),
      el("th", {}, "Provenance"),
      el("th", {}, "Actions")),
  );
  for (const entry of records) {
    const stageBadge = el("span", { class: `stage-badge stage-${entry.stage}` }, entry.stage);
    const actions = el("td", { class: "actions" });
    if (session.accredited) {
      const publish = el("button", { type: "button", class: "publish" }, "publish");
      publish.addEventListener("click", async () => {
        publish.disabled = true;
        try {
          await api(`/api/records/${entry.id}/publish`, { method: "POST" });
          await renderDashboard(root, opts);
          opts.onChanged?.();
        } catch (error) {
          publish.disabled = false;
          actions.append(el("span", { class: "action-error" }, String(error)));
        }
      });
      actions.append(publish);

      const remove = el("button", { type: "button", class: "delete" }, "delete");
      if (entry.ever_published) {
        remove.disabled = true;
        remove.title = "published records are persistent and cannot be removed";
      } else {
        remove.addEventListener("click", async () => {
          remove.disabled = true;
          try {
            await api(`/api/records/${entry.id}`, { method: "DELETE" });
            await renderDashboard(root, opts);
            opts.onChanged?.();
          } catch (error) {
            remove.disabled = false;
            actions.append(el("span", { class: "action-error" }, String(error)));
          }
        });
      }
      actions.append(remove);
    }
    actions.append(
      el("a", { href: `#/edit/${opts.templateId}/${entry.id}`, class: "edit-link" }, "edit"),
    );

    table.append(
      el("tr", { "data-record": entry.id },
        el("td", {},
          el("a", { href: `#/record/${opts.resourceName}/${entry.id}` }, entry.label)),
        el("td", {}, stageBadge),
        el("td", {}, `${entry.updated_at} by ${entry.updated_by}`),
        el("td", {}, digest(entry)),
        actions),
    );
  }
  root.append(table);
}
