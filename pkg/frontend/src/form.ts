/** Record form built from the server's widget list. Submit stays disabled
 * until every required field has a value; duplicate warnings are visible but
 * never block; approved NER candidates ride into the payload as keyword
 * values of their field. */

import {
  api,
  DuplicateHit,
  EntityRef,
  FieldValueJson,
  FormSpec,
  RecordData,
  WidgetSpec,
} from "./api.js";
import { mountAutocomplete } from "./autocomplete.js";
import { clear, debounce, el } from "./dom.js";
import { mountNerPanel, NerPanelHandle } from "./ner.js";

type RawValue = string | { iri?: string; label: string };

interface WidgetState {
  spec: WidgetSpec;
  inputs: (HTMLInputElement | HTMLTextAreaElement | HTMLSelectElement)[];
  entities: EntityRef[];
  ner?: NerPanelHandle;
  chipList?: HTMLElement;
}

export interface RecordFormOptions {
  initial?: RecordData;
  onSubmit: (payload: { template_id: string; values: Record<string, RawValue[]> }) => void;
  debounceMs?: number;
}

export class RecordForm {
  readonly root: HTMLElement;
  readonly spec: FormSpec;
  readonly submitButton: HTMLButtonElement;
  private readonly widgets = new Map<string, WidgetState>();
  private readonly opts: RecordFormOptions;

  constructor(root: HTMLElement, spec: FormSpec, opts: RecordFormOptions) {
    this.root = root;
    this.spec = spec;
    this.opts = opts;
    this.submitButton = el("button", { type: "submit", class: "submit", disabled: "" }, "Save record");
    this.build();
    this.applyInitial();
    this.updateSubmitState();
  }

  private build(): void {
    clear(this.root);
    const form = el("form", { class: "record-form" });
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (!this.submitButton.disabled) this.opts.onSubmit(this.payload());
    });
    for (const widget of this.spec.widgets) {
      form.append(this.buildRow(widget));
    }
    form.append(this.submitButton);
    this.root.append(form);
  }

  private buildRow(spec: WidgetSpec): HTMLElement {
    const row = el("div", { class: `form-row widget-${spec.widget}`, "data-field": spec.id });
    row.append(
      el("label", { for: `field-${spec.id}` }, spec.label + (spec.required ? " *" : "")),
    );
    const state: WidgetState = { spec, inputs: [], entities: [] };
    this.widgets.set(spec.id, state);

    if (spec.widget === "entity") {
      const chips = el("div", { class: "entity-chips" });
      state.chipList = chips;
      const input = el("input", {
        id: `field-${spec.id}`,
        type: "text",
        autocomplete: "off",
        placeholder: "type to search…",
      });
      state.inputs.push(input);
      row.append(chips, input);
      if (spec.suggest_endpoint) {
        mountAutocomplete(input, {
          templateId: this.spec.template_id,
          fieldId: spec.id,
          endpoint: spec.suggest_endpoint,
          debounceMs: this.opts.debounceMs,
          onPick: (entity) => this.addEntity(spec.id, entity),
        });
      }
    } else if (spec.widget === "dropdown") {
      const select = el("select", { id: `field-${spec.id}` });
      select.append(el("option", { value: "" }, "—"));
      for (const term of spec.vocabulary_terms) {
        select.append(el("option", { value: term.term_iri }, term.label));
      }
      select.addEventListener("change", () => this.updateSubmitState());
      state.inputs.push(select);
      row.append(select);
    } else if (spec.widget === "text_long") {
      const textarea = el("textarea", { id: `field-${spec.id}`, rows: "5" });
      textarea.addEventListener("input", () => this.updateSubmitState());
      state.inputs.push(textarea);
      row.append(textarea);
      if (spec.ner_endpoint) {
        const panel = el("div", { class: "ner-panel" });
        row.append(panel);
        state.ner = mountNerPanel(textarea, panel, spec.ner_endpoint);
      }
    } else {
      const type =
        spec.widget === "checkbox" ? "checkbox" : spec.widget === "date" ? "date" : "text";
      const input = el("input", { id: `field-${spec.id}`, type });
      input.addEventListener("input", () => this.updateSubmitState());
      state.inputs.push(input);
      row.append(input);
      if (spec.cardinality === "many" && spec.widget !== "checkbox") {
        const add = el("button", { type: "button", class: "add-value" }, "+ add");
        add.addEventListener("click", () => {
          const extra = el("input", { type });
          extra.addEventListener("input", () => this.updateSubmitState());
          state.inputs.push(extra);
          row.insertBefore(extra, add);
        });
        row.append(add);
      }
    }

    if (spec.disambiguate && spec.duplicate_endpoint) {
      const warning = el("div", { class: "duplicate-warning", hidden: "" });
      row.append(warning);
      const check = debounce(async () => {
        const value = (state.inputs[0] as HTMLInputElement).value.trim();
        if (value.length < 2) {
          warning.hidden = true;
          return;
        }
        try {
          const hits = await api<DuplicateHit[]>(
            `${spec.duplicate_endpoint}?${new URLSearchParams({
              template: this.spec.template_id,
              value,
            })}`,
          );
          clear(warning);
          if (!hits.length) {
            warning.hidden = true;
            return;
          }
          warning.hidden = false;
          warning.append(
            el("strong", {}, "possible duplicates: "),
            ...hits.map((hit) =>
              el("span", { class: "duplicate-hit" }, `${hit.label} (${hit.stage}) `),
            ),
          );
        } catch {
          warning.hidden = true;
        }
      }, this.opts.debounceMs ?? 250);
      state.inputs[0].addEventListener("input", check);
    }
    return row;
  }

  private addEntity(fieldId: string, entity: EntityRef): void {
    const state = this.widgets.get(fieldId);
    if (!state || !state.chipList) return;
    if (state.spec.cardinality === "one") state.entities = [];
    state.entities.push(entity);
    this.renderChips(state);
    this.updateSubmitState();
  }

  private renderChips(state: WidgetState): void {
    const chips = state.chipList;
    if (!chips) return;
    clear(chips);
    state.entities.forEach((entity, index) => {
      const chip = el(
        "span",
        { class: entity.iri ? "entity-chip" : "entity-chip new-entity" },
        entity.label,
        entity.iri ? el("span", { class: "chip-iri", title: entity.iri }, " ∞") : " (new)",
      );
      const remove = el("button", { type: "button", class: "chip-remove" }, "×");
      remove.addEventListener("click", () => {
        state.entities.splice(index, 1);
        this.renderChips(state);
        this.updateSubmitState();
      });
      chip.append(remove);
      chips.append(chip);
    });
  }

  private applyInitial(): void {
    const initial = this.opts.initial;
    if (!initial) return;
    for (const [fieldId, values] of Object.entries(initial.values)) {
      const state = this.widgets.get(fieldId);
      if (!state) continue;
      const literals = values.filter((v): v is Extract<FieldValueJson, { type: "literal" }> => v.type === "literal");
      const entities = values.filter((v) => v.type !== "literal");
      if (state.spec.widget === "entity" || (state.spec.widget === "text_long" && entities.length)) {
        state.entities = entities.map((v) =>
          v.type === "entity" ? { iri: v.iri, label: v.label } : { label: v.label },
        );
        if (state.chipList) this.renderChips(state);
      }
      literals.forEach((value, index) => {
        const input = state.inputs[index];
        if (!input) return;
        if (state.spec.widget === "checkbox") {
          (input as HTMLInputElement).checked = value.value === "true";
        } else if (input instanceof HTMLSelectElement) {
          input.value = value.value;
        } else {
          input.value = value.value;
        }
      });
      if (state.spec.widget === "dropdown" && entities.length) {
        const first = entities[0];
        if (first.type === "entity") (state.inputs[0] as HTMLSelectElement).value = first.iri;
      }
    }
  }

  hasValue(fieldId: string): boolean {
    const state = this.widgets.get(fieldId);
    if (!state) return false;
    if (state.spec.widget === "entity") return state.entities.length > 0;
    if (state.spec.widget === "checkbox") return true; // unchecked is a valid false
    return state.inputs.some((input) =>
      input instanceof HTMLSelectElement ? input.value !== "" : input.value.trim() !== "",
    );
  }

  updateSubmitState(): void {
    const missing = this.spec.widgets.filter((w) => w.required && !this.hasValue(w.id));
    this.submitButton.disabled = missing.length > 0;
  }

  payload(): { template_id: string; values: Record<string, RawValue[]> } {
    const values: Record<string, RawValue[]> = {};
    for (const [fieldId, state] of this.widgets) {
      const collected: RawValue[] = [];
      if (state.spec.widget === "entity") {
        collected.push(...state.entities.map((entity) => ({ iri: entity.iri, label: entity.label })));
      } else if (state.spec.widget === "checkbox") {
        collected.push((state.inputs[0] as HTMLInputElement).checked ? "true" : "false");
      } else {
        for (const input of state.inputs) {
          const value = input instanceof HTMLSelectElement ? input.value : input.value.trim();
          if (value) collected.push(value);
        }
        if (state.spec.widget === "text_long") {
          const approved = state.ner?.approved() ?? [];
          collected.push(...approved.map((entity) => ({ iri: entity.iri, label: entity.label })));
        }
      }
      if (collected.length) values[fieldId] = collected;
    }
    return { template_id: this.spec.template_id, values };
  }

  nerPanel(fieldId: string): NerPanelHandle | undefined {
    return this.widgets.get(fieldId)?.ner;
  }
}
