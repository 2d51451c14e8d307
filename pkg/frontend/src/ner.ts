/** NER review panel: extraction runs when the long-text field loses focus;
 * candidates render as approve/discard chips and only approved ones join the
 * submission payload. Editing the text and re-running replaces the set. */

import { api, EntityRef, NerCandidate, NerResponse, SequenceGuard } from "./api.js";
import { clear, el } from "./dom.js";

export interface NerPanelHandle {
  refresh(): Promise<void>;
  approved(): EntityRef[];
  candidates(): NerCandidate[];
  host: HTMLElement;
}

export function mountNerPanel(
  textarea: HTMLTextAreaElement,
  host: HTMLElement,
  endpoint: string,
): NerPanelHandle {
  const guard = new SequenceGuard();
  let current: NerCandidate[] = [];
  let approvedIndexes = new Set<number>();

  const render = (degraded: boolean) => {
    clear(host);
    if (degraded) {
      host.append(el("div", { class: "ner-degraded" }, "some extraction providers were unavailable"));
    }
    if (!current.length) {
      host.append(el("div", { class: "ner-empty" }, "no entities found"));
      return;
    }
    host.append(el("div", { class: "ner-title" }, "Extracted entities — approve to add as keywords"));
    current.forEach((candidate, index) => {
      const approved = approvedIndexes.has(index);
      const chip = el(
        "span",
        { class: approved ? "ner-chip approved" : "ner-chip", "data-index": String(index) },
        el("span", { class: "ner-surface" }, candidate.label),
        candidate.kb_iri ? el("span", { class: "ner-linked", title: candidate.kb_iri }, "∞") : null,
      );
      const approve = el("button", { type: "button", class: "ner-approve" }, approved ? "✓" : "approve");
      approve.addEventListener("click", () => {
        approvedIndexes.add(index);
        render(false);
      });
      const discard = el("button", { type: "button", class: "ner-discard" }, "discard");
      discard.addEventListener("click", () => {
        approvedIndexes.delete(index);
        current = current.filter((_, i) => i !== index);
        approvedIndexes = new Set(
          [...approvedIndexes].map((i) => (i > index ? i - 1 : i)).filter((i) => i >= 0),
        );
        render(false);
      });
      chip.append(approve, discard);
      host.append(chip);
    });
  };

  const refresh = async () => {
    const text = textarea.value.trim();
    if (!text) {
      current = [];
      approvedIndexes = new Set();
      clear(host);
      return;
    }
    const token = guard.next();
    try {
      const response = await api<NerResponse>(`${endpoint}?${new URLSearchParams({ text })}`);
      if (!guard.isCurrent(token)) return;
      current = response.candidates; // a re-run replaces the candidate set
      approvedIndexes = new Set();
      render(response.degraded);
    } catch {
      if (guard.isCurrent(token)) {
        current = [];
        approvedIndexes = new Set();
        clear(host);
      }
    }
  };

  textarea.addEventListener("blur", () => {
    void refresh();
  });

  return {
    refresh,
    host,
    candidates: () => current.slice(),
    approved: () =>
      [...approvedIndexes]
        .sort((a, b) => a - b)
        .map((index) => {
          const candidate = current[index];
          return candidate.kb_iri
            ? { iri: candidate.kb_iri, label: candidate.label }
            : { label: candidate.label };
        }),
  };
}
