/** Hash router and shell. Every view's state is reproducible from the URL. */

import { api, FormSpec, RecordData, SessionInfo, TemplateInfo } from "./api.js";
import { renderDashboard } from "./dashboard.js";
import { clear, el } from "./dom.js";
import { ExploreState, parseExploreState, renderExplore, stateToParams } from "./explore.js";
import { RecordForm } from "./form.js";
import { renderRecordView } from "./recordview.js";
import { renderSparqlView, renderSubsetDocs } from "./sparql.js";

interface Route {
  view: string;
  parts: string[];
  search: string;
}

export function parseHash(hash: string): Route {
  const raw = hash.startsWith("#/") ? hash.slice(2) : hash.replace(/^#/, "");
  const [path, search = ""] = raw.split("?", 2);
  const parts = path.split("/").filter(Boolean);
  return { view: parts[0] ?? "", parts: parts.slice(1), search };
}

async function templateList(): Promise<TemplateInfo[]> {
  const docs = await api<Record<string, unknown>[]>("/api/templates");
  return docs.map((doc) => ({
    template_id: String(doc.template_id),
    resource_name: String(doc.resource_name),
    label: String(doc.label ?? doc.template_id),
  }));
}

export class App {
  readonly root: HTMLElement;
  readonly main: HTMLElement;
  private templates: TemplateInfo[] = [];

  constructor(root: HTMLElement) {
    this.root = root;
    this.main = el("main", { id: "view" });
  }

  async start(): Promise<void> {
    const [templates, session] = await Promise.all([
      templateList(),
      api<SessionInfo>("/api/session"),
    ]);
    this.templates = templates;
    clear(this.root);
    this.root.append(this.nav(session), this.main);
    window.addEventListener("hashchange", () => {
      void this.route();
    });
    await this.route();
  }

  private nav(session: SessionInfo): HTMLElement {
    const nav = el("nav", { class: "app-nav" });
    nav.append(el("a", { href: "#/" }, "Home"));
    for (const template of this.templates) {
      nav.append(
        el("a", { href: `#/explore/${template.template_id}` }, template.label),
        el("a", { href: `#/new/${template.template_id}`, class: "nav-new" }, "+ add"),
      );
    }
    nav.append(
      el("a", { href: "#/review" }, "Review"),
      el("a", { href: "#/sparql" }, "SPARQL"),
    );
    if (session.authenticated) {
      nav.append(
        el("span", { class: "session" },
          `${session.user_id}${session.accredited ? " (reviewer)" : ""}`),
      );
    } else if (session.auth_mode === "oauth") {
      nav.append(el("a", { href: "/oauth/login", class: "login" }, "Sign in"));
    }
    return nav;
  }

  async route(): Promise<void> {
    const route = parseHash(window.location.hash);
    clear(this.main);
    try {
      if (route.view === "" || route.view === "home") {
        this.renderHome();
      } else if (route.view === "explore") {
        const templateId = route.parts[0] ?? this.templates[0]?.template_id;
        const state = parseExploreState(templateId, route.search);
        await renderExplore(this.main, state, {
          onStateChange: (next: ExploreState) => {
            window.location.hash = `#/explore/${next.templateId}?${stateToParams(next)}`;
          },
        });
      } else if (route.view === "new" || route.view === "edit") {
        await this.renderForm(route.view === "edit", route.parts);
      } else if (route.view === "review") {
        const template = this.templates[0];
        const templateId = route.parts[0] ?? template?.template_id;
        const info = this.templates.find((t) => t.template_id === templateId);
        if (info) {
          await renderDashboard(this.main, {
            templateId: info.template_id,
            resourceName: info.resource_name,
          });
        }
      } else if (route.view === "record") {
        await renderRecordView(this.main, route.parts[0], route.parts[1]);
      } else if (route.view === "sparql") {
        const query = new URLSearchParams(route.search).get("query") ?? "";
        renderSparqlView(this.main, query);
      } else if (route.view === "docs" && route.parts[0] === "sparql-subset") {
        renderSubsetDocs(this.main);
      } else {
        this.main.append(el("p", {}, "not found"));
      }
    } catch (error) {
      clear(this.main);
      this.main.append(el("p", { class: "view-error" }, String(error)));
    }
  }

  private renderHome(): void {
    this.main.append(el("h2", {}, "Catalogue"));
    const list = el("ul", {});
    for (const template of this.templates) {
      list.append(
        el("li", {},
          el("a", { href: `#/explore/${template.template_id}` }, template.label),
          ` — `,
          el("a", { href: `#/new/${template.template_id}` }, "contribute")),
      );
    }
    this.main.append(list);
  }

  private async renderForm(editing: boolean, parts: string[]): Promise<void> {
    const templateId = parts[0];
    const spec = await api<FormSpec>(`/api/form/${templateId}`);
    let initial: RecordData | undefined;
    if (editing) {
      initial = await api<RecordData>(`/api/records/${parts[1]}`);
    }
    const status = el("div", { class: "form-status" });
    const host = el("div", {});
    this.main.append(
      el("h2", {}, editing ? "Edit record" : "New record"), host, status,
    );
    new RecordForm(host, spec, {
      initial,
      onSubmit: async (payload) => {
        clear(status);
        try {
          if (editing && initial) {
            await api(`/api/records/${initial.id}`, {
              method: "PUT",
              body: JSON.stringify(payload),
            });
            status.append(el("p", { class: "saved" }, "saved"));
          } else {
            const created = await api<{ id: string }>("/api/records", {
              method: "POST",
              body: JSON.stringify(payload),
            });
            window.location.hash = `#/edit/${templateId}/${created.id}`;
          }
        } catch (error) {
          status.append(el("p", { class: "save-error" }, String(error)));
        }
      },
    });
  }
}

export function bootstrap(): void {
  const root = document.getElementById("app");
  if (root) void new App(root).start();
}

declare global {
  interface Window {
    __gleaneryTest?: boolean;
  }
}

if (typeof window !== "undefined" && !window.__gleaneryTest) {
  bootstrap();
}
