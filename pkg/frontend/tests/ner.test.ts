import { describe, expect, it } from "vitest";

import { mountNerPanel } from "../src/ner.js";
import { FetchStub, ok } from "./stub-fetch.js";

const CANDIDATES = [
  { surface: "Federico Zeri", start: 0, end: 13, kb_iri: "https://kb.example/entity/zeri",
    label: "Federico Zeri", confidence: 0.9, providers: ["builtin"] },
  { surface: "Rome", start: 25, end: 29, kb_iri: null,
    label: "Rome", confidence: 0.5, providers: ["builtin"] },
  { surface: "Siena", start: 40, end: 45, kb_iri: null,
    label: "Siena", confidence: 0.5, providers: ["builtin"] },
];

function setup(candidates = CANDIDATES) {
  const stub = new FetchStub().on("GET", "/api/ner", () =>
    ok({ degraded: false, candidates }),
  );
  stub.install();
  document.body.innerHTML = "";
  const textarea = document.createElement("textarea");
  const host = document.createElement("div");
  document.body.append(textarea, host);
  const panel = mountNerPanel(textarea, host, "/api/ner");
  return { stub, textarea, host, panel };
}

describe("NER review panel", () => {
  it("extracts on blur and renders approve/discard chips", async () => {
    const { textarea, host, panel } = setup();
    textarea.value = "Federico Zeri studied in Rome and Siena";
    textarea.dispatchEvent(new Event("blur"));
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(host.querySelectorAll(".ner-chip").length).toBe(3);
    expect(panel.candidates().length).toBe(3);
  });

  it("approving 2 of 3 puts exactly 2 into the payload", async () => {
    const { host, panel, textarea } = setup();
    textarea.value = "some text";
    await panel.refresh();
    const approveButtons = host.querySelectorAll<HTMLButtonElement>(".ner-approve");
    approveButtons[0].click();
    host.querySelectorAll<HTMLButtonElement>(".ner-approve")[1].click();
    const approved = panel.approved();
    expect(approved).toEqual([
      { iri: "https://kb.example/entity/zeri", label: "Federico Zeri" },
      { label: "Rome" }, // unresolved candidate comes through as a new entity
    ]);
  });

  it("discard all leaves the payload empty", async () => {
    const { host, panel, textarea } = setup();
    textarea.value = "some text";
    await panel.refresh();
    while (host.querySelector(".ner-discard")) {
      (host.querySelector(".ner-discard") as HTMLButtonElement).click();
    }
    expect(panel.approved()).toEqual([]);
    expect(panel.candidates()).toEqual([]);
  });

  it("re-running after an edit replaces the candidate set and approvals", async () => {
    const { stub, host, panel, textarea } = setup();
    textarea.value = "v1";
    await panel.refresh();
    (host.querySelector(".ner-approve") as HTMLButtonElement).click();
    expect(panel.approved().length).toBe(1);

    stub.on("GET", "/api/ner", () =>
      ok({ degraded: false, candidates: [CANDIDATES[2]] }),
    );
    // new routes are appended; replace by reinstalling a fresh stub
    const fresh = new FetchStub().on("GET", "/api/ner", () =>
      ok({ degraded: false, candidates: [CANDIDATES[2]] }),
    );
    fresh.install();
    textarea.value = "edited text";
    await panel.refresh();
    expect(panel.candidates().map((c) => c.label)).toEqual(["Siena"]);
    expect(panel.approved()).toEqual([]); // approvals do not survive a re-run
  });
});
