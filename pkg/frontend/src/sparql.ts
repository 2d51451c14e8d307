/** SPARQL GUI: textarea + run button; renders a result table, and explains
 * out-of-subset queries with a pointer to the subset documentation. */

import { ApiError, runSparql, SparqlResults } from "./api.js";
import { clear, el } from "./dom.js";

export const SUBSET_DOC_ROUTE = "#/docs/sparql-subset";

export const SUBSET_SUMMARY = `The embedded endpoint answers SELECT queries with
basic graph patterns, GRAPH scoping, FILTER (=, !=, CONTAINS, REGEX, LCASE/STR),
GROUP BY with COUNT, ORDER BY, LIMIT and OFFSET. OPTIONAL, UNION, MINUS, BIND,
VALUES, subqueries, property paths and other aggregates are outside the subset;
configure endpoint.query_url to route such queries to a full SPARQL 1.1 endpoint.`;

function resultsTable(results: SparqlResults): HTMLElement {
  const table = el("table", { class: "sparql-results" });
  table.append(
    el("tr", {}, ...results.head.vars.map((variable) => el("th", {}, `?${variable}`))),
  );
  for (const row of results.results.bindings) {
    table.append(
      el(
        "tr",
        {},
        ...results.head.vars.map((variable) => {
          const binding = row[variable];
          return el("td", {}, binding ? binding.value : "");
        }),
      ),
    );
  }
  return table;
}

export function renderSparqlView(root: HTMLElement, initialQuery = ""): { run(): Promise<void> } {
  clear(root);
  root.append(el("h2", {}, "SPARQL"));
  const textarea = el(
    "textarea",
    { class: "sparql-query", rows: "8", spellcheck: "false" },
    initialQuery || "SELECT ?s ?p ?o WHERE { GRAPH ?g { ?s ?p ?o } } LIMIT 25",
  );
  const run = el("button", { type: "button", class: "sparql-run" }, "Run");
  const output = el("div", { class: "sparql-output" });
  root.append(textarea, run, output);

  const execute = async () => {
    clear(output);
    output.append(el("p", { class: "running" }, "running…"));
    try {
      const results = await runSparql(textarea.value);
      clear(output);
      if (!results.results.bindings.length) {
        output.append(el("p", { class: "empty-state" }, "no results"));
        return;
      }
      output.append(resultsTable(results));
    } catch (error) {
      clear(output);
      if (error instanceof ApiError && error.code === "UnsupportedFeature") {
        output.append(
          el(
            "div",
            { class: "unsupported-feature" },
            el("p", {}, `This query is outside the embedded subset: ${error.message}`),
            el("a", { href: SUBSET_DOC_ROUTE, class: "subset-docs-link" },
              "see the documented SPARQL subset"),
          ),
        );
      } else {
        output.append(el("p", { class: "sparql-error" }, String(error)));
      }
    }
  };
  run.addEventListener("click", () => {
    void execute();
  });
  return { run: execute };
}

export function renderSubsetDocs(root: HTMLElement): void {
  clear(root);
  root.append(
    el("h2", {}, "SPARQL subset"),
    el("p", { class: "subset-summary" }, SUBSET_SUMMARY),
  );
}
