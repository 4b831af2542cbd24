/** Browser entry point: wires the API client to the DOM. */

import { ApiClient, DesignEvent, EntrySource, PropertySheet, SheetEntry } from "./api.js";
import { renderPreview } from "./preview.js";
import { setCodePane } from "./codePane.js";

interface AppState {
  api: ApiClient;
  sessionId: string | null;
  svg: string;
  selected: string | null;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function valueInput(entry: SheetEntry, onCommit: (value: unknown) => void): HTMLElement {
  const value = entry.value as { kind: string; [key: string]: unknown };
  if (entry.widget === "duration_seconds" || entry.widget === "delay_seconds") {
    const input = document.createElement("input");
    input.type = "number";
    input.min = "0";
    input.step = "0.1";
    input.value = String(value.seconds ?? 0);
    input.onchange = () => onCommit({ kind: "time", seconds: Number(input.value) });
    return input;
  }
  if (entry.widget === "number") {
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.05";
    input.value = String(value.value ?? 0);
    input.onchange = () => onCommit({ kind: "number", value: Number(input.value) });
    return input;
  }
  if (entry.widget === "color_picker") {
    const input = document.createElement("input");
    input.type = "color";
    const toHex = (n: unknown) => Number(n).toString(16).padStart(2, "0");
    input.value = `#${toHex(value.r)}${toHex(value.g)}${toHex(value.b)}`;
    input.onchange = () => {
      const [r, g, b] = [1, 3, 5].map((i) => parseInt(input.value.slice(i, i + 2), 16));
      onCommit({ kind: "color", r, g, b, a: 1.0 });
    };
    return input;
  }
  if (entry.widget === "keyword_choice" && entry.options) {
    const select = document.createElement("select");
    for (const option of entry.options) {
      const item = document.createElement("option");
      item.value = item.textContent = option;
      select.appendChild(item);
    }
    select.value = String(value.name ?? "");
    select.onchange = () => onCommit({ kind: "keyword", name: select.value });
    return select;
  }
  const input = document.createElement("input");
  input.type = "text";
  input.value = String(value.text ?? value.name ?? "");
  input.onchange = () => onCommit({ kind: "raw", text: input.value });
  return input;
}

function renderSheet(
  root: HTMLElement,
  sheet: PropertySheet,
  onEdit: (source: EntrySource, value: unknown) => void,
): void {
  root.innerHTML = "";
  for (const group of sheet.groups) {
    const section = document.createElement("section");
    const heading = document.createElement("h3");
    heading.textContent = group.target;
    section.appendChild(heading);
    for (const entry of group.entries) {
      const row = document.createElement("label");
      row.className = "sheet-row";
      const name = document.createElement("span");
      name.textContent = entry.property;
      row.appendChild(name);
      row.appendChild(valueInput(entry, (value) => onEdit(entry.source, value)));
      section.appendChild(row);
    }
    root.appendChild(section);
  }
}

export function startApp(baseUrl = ""): void {
  const state: AppState = {
    api: new ApiClient(baseUrl),
    sessionId: null,
    svg: "",
    selected: null,
  };
  const previews = el<HTMLDivElement>("previews");
  const codePane = el<HTMLPreElement>("code-pane");
  const sheetPane = el<HTMLDivElement>("sheet-pane");
  const status = el<HTMLDivElement>("status");

  async function selectDesign(designId: string, css: string): Promise<void> {
    state.selected = designId;
    setCodePane(codePane, css);
    const sheet = await state.api.getPropertySheet(designId);
    renderSheet(sheetPane, sheet, async (source, value) => {
      const patched = await state.api.patchProperty(designId, source, value);
      setCodePane(codePane, patched.design.css_current);
      const container = previews.querySelector<HTMLElement>(
        `[data-design-id="${designId}"]`,
      );
      if (container) {
        renderPreview(container, state.svg, patched.design.scope_index,
                      patched.design.css_current);
      }
      renderSheet(sheetPane, patched.property_sheet, () => undefined);
    });
  }

  function addDesign(design: DesignEvent): void {
    let container = previews.querySelector<HTMLElement>(
      `[data-design-id="${design.design_id}"]`,
    );
    if (!container) {
      container = document.createElement("div");
      container.dataset.designId = design.design_id;
      container.onclick = () => void selectDesign(design.design_id, design.css);
      previews.appendChild(container);
    }
    renderPreview(container, state.svg, design.ordinal, design.css);
  }

  el<HTMLButtonElement>("create").onclick = async () => {
    const source = el<HTMLTextAreaElement>("svg-input").value;
    const created = await state.api.createSession(source);
    state.sessionId = created.session_id;
    state.svg = created.preprocessed_svg;
    previews.innerHTML = "";
    status.textContent = `session ${created.session_id}`;
  };

  el<HTMLButtonElement>("generate").onclick = async () => {
    if (!state.sessionId) return;
    status.textContent = "generating…";
    await state.api.runIteration(state.sessionId, el<HTMLInputElement>("prompt").value, {
      onEvent: (event) => {
        if (event.event === "design") addDesign(event.data);
        if (event.event === "error") status.textContent = event.data.message;
        if (event.event === "done") status.textContent = "done";
      },
    });
  };
}
