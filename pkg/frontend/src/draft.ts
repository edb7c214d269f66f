/** The constraint draft: everything a designer has specified so far.
 *
 * The draft lives in session storage so a reload keeps the work.  Pair keys
 * are "i:j" with wire component indices (canvas = -1) and i < j.
 */

import type { ConstraintGraphJson } from "./types.js";

export interface FixedSizeEntry {
  w: number;
  h: number;
}

export interface ConstraintDraft {
  categories: string[];
  components: string[];
  loc: Record<string, string>;
  size: Record<string, string>;
  fixedSizes: Record<number, FixedSizeEntry>;
  samples: number;
  seed: number;
}

export const STORAGE_KEY = "ndn-studio-draft";

export function emptyDraft(categories: string[]): ConstraintDraft {
  return {
    categories,
    components: [],
    loc: {},
    size: {},
    fixedSizes: {},
    samples: 4,
    seed: 0,
  };
}

export function pairKey(i: number, j: number): string {
  return i < j ? `${i}:${j}` : `${j}:${i}`;
}

export function parsePairKey(key: string): [number, number] {
  const [i, j] = key.split(":").map(Number);
  return [i, j];
}

/** All selectable pairs: one per component for the canvas, one per component pair. */
export function allPairs(draft: ConstraintDraft): [number, number][] {
  const pairs: [number, number][] = [];
  for (let j = 0; j < draft.components.length; j++) pairs.push([-1, j]);
  for (let i = 0; i < draft.components.length; i++) {
    for (let j = i + 1; j < draft.components.length; j++) pairs.push([i, j]);
  }
  return pairs;
}

export function addComponent(draft: ConstraintDraft, category: string): ConstraintDraft {
  if (!draft.categories.includes(category) || category === "canvas") {
    throw new Error(`cannot add component of category '${category}'`);
  }
  return { ...draft, components: [...draft.components, category] };
}

export function removeComponent(draft: ConstraintDraft, index: number): ConstraintDraft {
  if (index < 0 || index >= draft.components.length) throw new Error("index out of range");
  const shift = (idx: number): number | null => {
    if (idx === index) return null;
    return idx > index ? idx - 1 : idx;
  };
  const remap = (table: Record<string, string>): Record<string, string> => {
    const out: Record<string, string> = {};
    for (const [key, rel] of Object.entries(table)) {
      const [i, j] = parsePairKey(key);
      const ni = i === -1 ? -1 : shift(i);
      const nj = shift(j);
      if (ni === null || nj === null) continue;
      out[pairKey(ni, nj)] = rel;
    }
    return out;
  };
  const fixedSizes: Record<number, FixedSizeEntry> = {};
  for (const [key, value] of Object.entries(draft.fixedSizes)) {
    const idx = shift(Number(key));
    if (idx !== null) fixedSizes[idx] = value;
  }
  return {
    ...draft,
    components: draft.components.filter((_, k) => k !== index),
    loc: remap(draft.loc),
    size: remap(draft.size),
    fixedSizes,
  };
}

/** Pick a location relation for a pair; null clears it back to unspecified. */
export function setLocation(
  draft: ConstraintDraft,
  i: number,
  j: number,
  relation: string | null,
): ConstraintDraft {
  const loc = { ...draft.loc };
  const key = pairKey(i, j);
  if (relation === null) delete loc[key];
  else loc[key] = relation;
  return { ...draft, loc };
}

export function setSize(
  draft: ConstraintDraft,
  i: number,
  j: number,
  relation: string | null,
): ConstraintDraft {
  const size = { ...draft.size };
  const key = pairKey(i, j);
  if (relation === null) delete size[key];
  else size[key] = relation;
  return { ...draft, size };
}

export function validateFixedSize(w: number, h: number): string | null {
  if (!Number.isFinite(w) || !Number.isFinite(h)) return "sizes must be numbers";
  if (w <= 0 || w > 1 || h <= 0 || h > 1) return "sizes must be in (0, 1]";
  return null;
}

export function setFixedSize(
  draft: ConstraintDraft,
  index: number,
  entry: FixedSizeEntry | null,
): ConstraintDraft {
  if (index < 0 || index >= draft.components.length) throw new Error("index out of range");
  const fixedSizes = { ...draft.fixedSizes };
  if (entry === null) {
    delete fixedSizes[index];
  } else {
    const problem = validateFixedSize(entry.w, entry.h);
    if (problem) throw new Error(problem);
    fixedSizes[index] = entry;
  }
  return { ...draft, fixedSizes };
}

/** The wire document sent to the service; unspecified pairs stay omitted. */
export function toConstraintJson(draft: ConstraintDraft): ConstraintGraphJson {
  const entries = (table: Record<string, string>) =>
    Object.entries(table)
      .map(([key, rel]) => {
        const [i, j] = parsePairKey(key);
        return [i, rel, j] as [number, string, number];
      })
      .sort((a, b) => a[0] - b[0] || a[2] - b[2]);
  return {
    categories: [...draft.categories],
    components: [...draft.components],
    loc: entries(draft.loc),
    size: entries(draft.size),
  };
}

export function draftToJson(draft: ConstraintDraft): string {
  return JSON.stringify(draft);
}

export function draftFromJson(text: string): ConstraintDraft {
  const obj = JSON.parse(text) as ConstraintDraft;
  if (!Array.isArray(obj.categories) || !Array.isArray(obj.components)) {
    throw new Error("not a draft document");
  }
  return {
    categories: obj.categories,
    components: obj.components,
    loc: obj.loc ?? {},
    size: obj.size ?? {},
    fixedSizes: obj.fixedSizes ?? {},
    samples: obj.samples ?? 4,
    seed: obj.seed ?? 0,
  };
}

export function saveDraft(draft: ConstraintDraft, storage: Storage = sessionStorage): void {
  storage.setItem(STORAGE_KEY, draftToJson(draft));
}

export function loadDraft(storage: Storage = sessionStorage): ConstraintDraft | null {
  const text = storage.getItem(STORAGE_KEY);
  if (!text) return null;
  try {
    return draftFromJson(text);
  } catch {
    return null;
  }
}
