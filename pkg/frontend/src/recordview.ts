/** Deep-linkable record view: published data is read back through the SPARQL
 * endpoint (the record's snapshot graph), provenance through the record API. */

import { api, RecordData, runSparql } from "./api.js";
import { clear, el } from "./dom.js";

export async function renderRecordView(
  root: HTMLElement,
  resourceName: string,
  local: string,
): Promise<void> {
  clear(root);
  const record = await api<RecordData>(`/api/records/${local}`);
  root.append(el("h2", {}, record.ever_published ? "Record" : "Record (draft)"));

  if (record.ever_published) {
    const pubGraph = `${record.iri}/pub/`;
    const results = await runSparql(
      `SELECT ?s ?p ?o WHERE { GRAPH <${pubGraph}> { ?s ?p ?o } }`,
    );
    const labels = new Map<string, string>();
    for (const row of results.results.bindings) {
      if (row.p?.value.endsWith("#label") && row.s && row.o) {
        labels.set(row.s.value, row.o.value);
      }
    }
    const table = el("table", { class: "record-view published" });
    for (const row of results.results.bindings) {
      if (!row.s || row.s.value !== record.iri) continue;
      if (row.p!.value.endsWith("22-rdf-syntax-ns#type")) continue;
      const object = row.o!;
      const shown =
        object.type === "uri"
          ? el("a", { href: object.value }, labels.get(object.value) ?? object.value)
          : el("span", {}, object.value);
      table.append(
        el("tr", {}, el("td", { class: "prop" }, row.p!.value), el("td", {}, shown)),
      );
    }
    root.append(el("p", { class: "record-iri" }, record.iri), table);
  } else {
    root.append(el("p", { class: "draft-note" }, "not published yet — draft values below"));
    const table = el("table", { class: "record-view draft" });
    for (const [fieldId, values] of Object.entries(record.values)) {
      for (const value of values) {
        table.append(
          el("tr", {},
            el("td", { class: "prop" }, fieldId),
            el("td", {}, value.type === "literal" ? value.value : value.label)),
        );
      }
    }
    root.append(table);
  }

  const history = el("ul", { class: "record-history" });
  for (const activity of record.history) {
    history.append(el("li", {}, `${activity.kind} by ${activity.agent} at ${activity.at}`));
  }
  root.append(el("h3", {}, "Provenance"), history);
}
