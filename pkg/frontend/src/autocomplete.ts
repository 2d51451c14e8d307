/** Entity autocomplete: debounced suggestion lookups with a stale-response
 * guard; picking a suggestion stores {iri, label}, a novel string offers a
 * "create new entity" row, and provider degradation shows a non-fatal notice. */

import { api, EntityRef, SequenceGuard, SuggestResponse } from "./api.js";
import { clear, el } from "./dom.js";

export interface AutocompleteOptions {
  templateId: string;
  fieldId: string;
  endpoint: string;
  limit?: number;
  debounceMs?: number;
  onPick: (value: EntityRef) => void;
}

export interface AutocompleteHandle {
  destroy(): void;
  menu: HTMLElement;
}

export function mountAutocomplete(
  input: HTMLInputElement,
  opts: AutocompleteOptions,
): AutocompleteHandle {
  const debounceMs = opts.debounceMs ?? 250;
  const limit = opts.limit ?? 8;
  const guard = new SequenceGuard();
  const menu = el("div", { class: "suggest-menu", role: "listbox", hidden: "" });
  input.insertAdjacentElement("afterend", menu);
  let timer: ReturnType<typeof setTimeout> | undefined;
  let inflight: AbortController | undefined;

  const hide = () => {
    menu.hidden = true;
    clear(menu);
  };

  const render = (query: string, response: SuggestResponse) => {
    clear(menu);
    menu.hidden = false;
    if (response.degraded) {
      menu.append(
        el("div", { class: "suggest-degraded" },
          "external suggestions unavailable; showing local matches"),
      );
    }
    for (const suggestion of response.suggestions) {
      const item = el(
        "div",
        { class: "suggest-item", role: "option", "data-iri": suggestion.iri },
        el("span", { class: "suggest-label" }, suggestion.label),
        suggestion.description
          ? el("span", { class: "suggest-description" }, ` — ${suggestion.description}`)
          : null,
        el("span", { class: `suggest-source badge-${suggestion.source}` }, suggestion.source),
        el("a", { class: "suggest-link", href: suggestion.link, target: "_blank" }, "↗"),
      );
      item.addEventListener("mousedown", (event) => {
        event.preventDefault();
        opts.onPick({ iri: suggestion.iri, label: suggestion.label });
        input.value = "";
        hide();
      });
      menu.append(item);
    }
    const createNew = el(
      "div",
      { class: "suggest-item suggest-create", role: "option" },
      `create new entity “${query}”`,
    );
    createNew.addEventListener("mousedown", (event) => {
      event.preventDefault();
      opts.onPick({ label: query });
      input.value = "";
      hide();
    });
    menu.append(createNew);
  };

  const lookUp = async () => {
    const query = input.value.trim();
    if (query.length < 2) {
      hide();
      return;
    }
    const token = guard.next();
    inflight?.abort();
    inflight = new AbortController();
    const params = new URLSearchParams({
      template: opts.templateId,
      field: opts.fieldId,
      q: query,
      limit: String(limit),
    });
    try {
      const response = await api<SuggestResponse>(`${opts.endpoint}?${params}`, {
        signal: inflight.signal,
      });
      if (guard.isCurrent(token)) render(query, response);
    } catch {
      if (guard.isCurrent(token)) hide();
    }
  };

  const onInput = () => {
    if (timer !== undefined) clearTimeout(timer);
    inflight?.abort(); // in-flight responses for older input are dead
    timer = setTimeout(lookUp, debounceMs);
  };
  const onBlur = () => setTimeout(hide, 150);

  input.addEventListener("input", onInput);
  input.addEventListener("blur", onBlur);
  return {
    menu,
    destroy() {
      input.removeEventListener("input", onInput);
      input.removeEventListener("blur", onBlur);
      menu.remove();
    },
  };
}
