/** Studio application: constraint editing, candidate browsing, recommendations.
 *
 * All semantic judgments (relation completion, consistency, extracted
 * relations) come from the service; this module only manages DOM state and
 * affine-scaled rendering.
 */

import { ApiClient, ServiceRequestError } from "./api.js";
import {
  ConstraintDraft,
  addComponent,
  allPairs,
  emptyDraft,
  loadDraft,
  pairKey,
  removeComponent,
  saveDraft,
  setFixedSize,
  setLocation,
  setSize,
  toConstraintJson,
  validateFixedSize,
} from "./draft.js";
import { renderGhost, renderLayout } from "./render.js";
import {
  CANVAS_RELATIONS,
  COMPONENT_RELATIONS,
  SIZE_RELATIONS,
  type GenerateResponse,
  type LayoutJson,
} from "./types.js";

export interface GhostSuggestion {
  box: [number, number, number, number];
  category: string;
}

export interface AppState {
  draft: ConstraintDraft;
  response: GenerateResponse | null;
  selected: number | null;
  canvas: LayoutJson | null;
  ghost: GhostSuggestion | null;
  error: string | null;
}

const CANDIDATE_WIDTH = 150;
const DETAIL_WIDTH = 320;
const CANVAS_WIDTH = 260;

export class StudioApp {
  state: AppState;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    categories: string[],
    private readonly storage: Storage = sessionStorage,
  ) {
    const restored = loadDraft(storage);
    const draft =
      restored && restored.categories.join("|") === categories.join("|")
        ? restored
        : emptyDraft(categories);
    this.state = {
      draft,
      response: null,
      selected: null,
      canvas: null,
      ghost: null,
      error: null,
    };
    this.buildSkeleton();
    this.renderEditor();
    this.renderCandidates();
    this.renderCanvas();
  }

  private get doc(): Document {
    return this.root.ownerDocument;
  }

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = this.doc.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
  }

  private buildSkeleton(): void {
    this.root.innerHTML = "";
    const error = this.el("div", "error-banner");
    error.id = "error-banner";
    error.style.display = "none";
    const editor = this.el("section", "editor-panel");
    editor.id = "editor";
    const results = this.el("section", "results-panel");
    results.id = "results";
    const detail = this.el("section", "detail-panel");
    detail.id = "detail";
    const canvas = this.el("section", "canvas-panel");
    canvas.id = "canvas-panel";
    this.root.append(error, editor, results, detail, canvas);
  }

  private setDraft(draft: ConstraintDraft): void {
    this.state.draft = draft;
    saveDraft(draft, this.storage);
    this.renderEditor();
  }

  private setError(message: string | null): void {
    this.state.error = message;
    const banner = this.doc.getElementById("error-banner");
    if (!banner) return;
    banner.textContent = message ?? "";
    banner.style.display = message ? "block" : "none";
  }

  // -- constraint editor -------------------------------------------------

  private renderEditor(): void {
    const editor = this.doc.getElementById("editor");
    if (!editor) return;
    editor.innerHTML = "";
    const draft = this.state.draft;

    const picker = this.el("select");
    picker.id = "category-pick";
    for (const name of draft.categories.filter((c) => c !== "canvas")) {
      const option = this.el("option", undefined, name);
      option.value = name;
      picker.appendChild(option);
    }
    const addButton = this.el("button", undefined, "Add component");
    addButton.id = "add-component";
    addButton.addEventListener("click", () => {
      this.setDraft(addComponent(this.state.draft, picker.value));
    });
    editor.append(picker, addButton);

    const list = this.el("ul", "component-list");
    list.id = "component-list";
    draft.components.forEach((name, index) => {
      const item = this.el("li", "component-row");
      item.append(this.el("span", "component-name", `${index}: ${name}`));
      const remove = this.el("button", "remove-component", "remove");
      remove.addEventListener("click", () => {
        this.setDraft(removeComponent(this.state.draft, index));
      });
      const sizeFlag = this.el("span", "fixed-size-flag");
      sizeFlag.style.display = "none";
      const wInput = this.el("input", "fixed-w");
      wInput.placeholder = "w";
      const hInput = this.el("input", "fixed-h");
      hInput.placeholder = "h";
      const existing = draft.fixedSizes[index];
      if (existing) {
        wInput.value = String(existing.w);
        hInput.value = String(existing.h);
      }
      const apply = () => {
        if (wInput.value === "" && hInput.value === "") {
          this.setDraft(setFixedSize(this.state.draft, index, null));
          return;
        }
        const w = Number(wInput.value);
        const h = Number(hInput.value);
        const problem = validateFixedSize(w, h);
        if (problem) {
          sizeFlag.textContent = problem;
          sizeFlag.style.display = "inline";
          sizeFlag.className = "fixed-size-flag invalid";
          return;
        }
        sizeFlag.style.display = "none";
        this.setDraft(setFixedSize(this.state.draft, index, { w, h }));
      };
      wInput.addEventListener("change", apply);
      hInput.addEventListener("change", apply);
      item.append(remove, wInput, hInput, sizeFlag);
      list.appendChild(item);
    });
    editor.appendChild(list);

    const pairs = this.el("div", "pair-editors");
    pairs.id = "pair-editors";
    for (const [i, j] of allPairs(draft)) {
      const row = this.el("div", i === -1 ? "pair-row canvas-pair" : "pair-row component-pair");
      const left = i === -1 ? "canvas" : `${i}:${draft.components[i]}`;
      row.append(this.el("span", "pair-label", `${left} -> ${j}:${draft.components[j]}`));
      const key = pairKey(i, j);

      const locSelect = this.el("select", "loc-select");
      locSelect.dataset.pair = key;
      const unspecified = this.el("option", undefined, "unspecified");
      unspecified.value = "";
      locSelect.appendChild(unspecified);
      const vocabulary = i === -1 ? CANVAS_RELATIONS : COMPONENT_RELATIONS;
      for (const rel of vocabulary) {
        const option = this.el("option", undefined, rel);
        option.value = rel;
        locSelect.appendChild(option);
      }
      locSelect.value = draft.loc[key] ?? "";
      locSelect.addEventListener("change", () => {
        this.setDraft(
          setLocation(this.state.draft, i, j, locSelect.value === "" ? null : locSelect.value),
        );
      });

      const sizeSelect = this.el("select", "size-select");
      sizeSelect.dataset.pair = key;
      const none = this.el("option", undefined, "unspecified");
      none.value = "";
      sizeSelect.appendChild(none);
      for (const rel of SIZE_RELATIONS) {
        const option = this.el("option", undefined, rel);
        option.value = rel;
        sizeSelect.appendChild(option);
      }
      sizeSelect.value = draft.size[key] ?? "";
      sizeSelect.addEventListener("change", () => {
        this.setDraft(
          setSize(this.state.draft, i, j, sizeSelect.value === "" ? null : sizeSelect.value),
        );
      });

      row.append(locSelect, sizeSelect);
      pairs.appendChild(row);
    }
    editor.appendChild(pairs);

    const samples = this.el("input");
    samples.id = "samples-input";
    samples.type = "number";
    samples.value = String(draft.samples);
    samples.addEventListener("change", () => {
      const n = Math.max(1, Math.floor(Number(samples.value) || 1));
      this.setDraft({ ...this.state.draft, samples: n });
    });
    const seed = this.el("input");
    seed.id = "seed-input";
    seed.type = "number";
    seed.value = String(draft.seed);
    seed.addEventListener("change", () => {
      this.setDraft({ ...this.state.draft, seed: Math.floor(Number(seed.value) || 0) });
    });
    const generate = this.el("button", undefined, "Generate");
    generate.id = "generate-btn";
    generate.addEventListener("click", () => {
      void this.requestGeneration();
    });
    editor.append(samples, seed, generate);
  }

  // -- generation --------------------------------------------------------

  async requestGeneration(): Promise<void> {
    const draft = this.state.draft;
    if (draft.components.length === 0) {
      this.setError("add at least one component first");
      return;
    }
    this.setError(null);
    try {
      const response = await this.client.generate(toConstraintJson(draft), {
        samples: draft.samples,
        seed: draft.seed,
        fixedSizes: draft.fixedSizes,
      });
      this.state.response = response;
      this.state.selected = null;
      this.renderCandidates();
    } catch (error) {
      if (error instanceof DOMException && error.name === "AbortError") return;
      const message =
        error instanceof ServiceRequestError
          ? error.field
            ? `${error.field}: ${error.message}`
            : error.message
          : String(error);
      this.setError(message);
    }
  }

  private renderCandidates(): void {
    const results = this.doc.getElementById("results");
    if (!results) return;
    results.innerHTML = "";
    const response = this.state.response;
    if (!response) return;
    const grid = this.el("div", "candidate-grid");
    grid.id = "candidate-grid";
    response.layouts.forEach((layout, index) => {
      const card = this.el("div", "candidate");
      card.dataset.index = String(index);
      card.appendChild(renderLayout(layout, { width: CANDIDATE_WIDTH, document: this.doc }));
      const badge = this.el(
        "span",
        "consistency-badge",
        `consistency ${(response.consistency[index] * 100).toFixed(0)}%`,
      );
      card.appendChild(badge);
      card.addEventListener("click", () => {
        this.state.selected = index;
        this.renderDetail();
      });
      grid.appendChild(card);
    });
    results.appendChild(grid);
    this.renderDetail();
  }

  private renderDetail(): void {
    const detail = this.doc.getElementById("detail");
    if (!detail) return;
    detail.innerHTML = "";
    const response = this.state.response;
    const selected = this.state.selected;
    if (response === null || selected === null) return;
    const layout = response.layouts[selected];
    detail.appendChild(renderLayout(layout, { width: DETAIL_WIDTH, document: this.doc }));
    const rows = this.el("ul", "relation-report");
    for (const row of response.reports[selected]) {
      const left = row.i === -1 ? "canvas" : `#${row.i}`;
      const item = this.el(
        "li",
        row.ok ? "report-row ok" : "report-row violated",
        `${row.kind} ${left}->#${row.j}: requested ${row.requested}, got ${row.extracted}`,
      );
      rows.appendChild(item);
    }
    detail.appendChild(rows);
    const adopt = this.el("button", undefined, "Use as canvas");
    adopt.id = "use-as-canvas";
    adopt.addEventListener("click", () => {
      this.setCanvas(JSON.parse(JSON.stringify(layout)) as LayoutJson);
    });
    detail.appendChild(adopt);
  }

  // -- recommendation ----------------------------------------------------

  setCanvas(layout: LayoutJson | null): void {
    this.state.canvas = layout;
    this.state.ghost = null;
    this.renderCanvas();
  }

  private renderCanvas(): void {
    const panel = this.doc.getElementById("canvas-panel");
    if (!panel) return;
    panel.innerHTML = "";
    const canvas = this.state.canvas;
    if (!canvas) {
      panel.appendChild(this.el("p", "canvas-empty", "No working canvas yet."));
      return;
    }
    const holder = this.el("div", "canvas-holder");
    holder.style.position = "relative";
    const rendered = renderLayout(canvas, { width: CANVAS_WIDTH, document: this.doc });
    rendered.id = "working-canvas";
    holder.appendChild(rendered);
    const ghost = this.state.ghost;
    if (ghost) {
      const scale = CANVAS_WIDTH / canvas.canvas_px[0];
      const ghostEl = renderGhost(ghost.box, ghost.category, canvas.canvas_px, scale, this.doc);
      ghostEl.id = "ghost-box";
      rendered.appendChild(ghostEl);
      const accept = this.el("button", undefined, "Accept");
      accept.id = "accept-ghost";
      accept.addEventListener("click", () => this.acceptGhost());
      const discard = this.el("button", undefined, "Discard");
      discard.id = "discard-ghost";
      discard.addEventListener("click", () => this.discardGhost());
      holder.append(accept, discard);
    }
    panel.appendChild(holder);

    const targetPick = this.el("select");
    targetPick.id = "target-pick";
    for (const name of this.state.draft.categories.filter((c) => c !== "canvas")) {
      const option = this.el("option", undefined, name);
      option.value = name;
      targetPick.appendChild(option);
    }
    const recommend = this.el("button", undefined, "Recommend placement");
    recommend.id = "recommend-btn";
    recommend.addEventListener("click", () => {
      void this.requestRecommendation(targetPick.value);
    });
    panel.append(targetPick, recommend);
  }

  async requestRecommendation(category: string): Promise<void> {
    const canvas = this.state.canvas;
    if (!canvas || canvas.components.length === 0) {
      this.setError("place at least one component on the canvas first");
      return;
    }
    this.setError(null);
    try {
      const response = await this.client.recommend(canvas, [category], this.state.draft.seed);
      this.state.ghost = { box: response.boxes[0], category };
      this.renderCanvas();
    } catch (error) {
      const message =
        error instanceof ServiceRequestError
          ? error.field
            ? `${error.field}: ${error.message}`
            : error.message
          : String(error);
      this.setError(message);
    }
  }

  acceptGhost(): void {
    const ghost = this.state.ghost;
    const canvas = this.state.canvas;
    if (!ghost || !canvas) return;
    canvas.components.push({ category: ghost.category, bbox: ghost.box });
    this.state.ghost = null;
    this.renderCanvas();
  }

  discardGhost(): void {
    this.state.ghost = null;
    this.renderCanvas();
  }
}

export async function createApp(
  root: HTMLElement,
  client: ApiClient,
  storage: Storage = sessionStorage,
): Promise<StudioApp> {
  const categories = await client.categories();
  return new StudioApp(root, client, categories, storage);
}
