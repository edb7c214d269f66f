import { describe, expect, it } from "vitest";

import {
  addComponent,
  allPairs,
  draftFromJson,
  draftToJson,
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
  type ConstraintDraft,
} from "../src/draft.js";
import { validateConstraintGraph } from "../src/schema.js";
import { CANVAS_RELATIONS, COMPONENT_RELATIONS, SIZE_RELATIONS } from "../src/types.js";

const CATEGORIES = ["canvas", "toolbar", "list-item", "button"];

function draftWith(components: string[]): ConstraintDraft {
  let draft = emptyDraft(CATEGORIES);
  for (const c of components) draft = addComponent(draft, c);
  return draft;
}

describe("draft editing", () => {
  it("adds and removes components", () => {
    let draft = draftWith(["toolbar", "button"]);
    expect(draft.components).toEqual(["toolbar", "button"]);
    draft = removeComponent(draft, 0);
    expect(draft.components).toEqual(["button"]);
  });

  it("rejects canvas and unknown categories", () => {
    const draft = emptyDraft(CATEGORIES);
    expect(() => addComponent(draft, "canvas")).toThrow();
    expect(() => addComponent(draft, "hero-image")).toThrow();
  });

  it("exposes one pair per component pair plus canvas pairs", () => {
    const draft = draftWith(["toolbar", "button"]);
    const pairs = allPairs(draft);
    expect(pairs).toEqual([
      [-1, 0],
      [-1, 1],
      [0, 1],
    ]);
  });

  it("reindexes relations when a component is removed", () => {
    let draft = draftWith(["toolbar", "list-item", "button"]);
    draft = setLocation(draft, 0, 1, "above");
    draft = setLocation(draft, 1, 2, "above");
    draft = setLocation(draft, -1, 2, "bottom-center");
    draft = removeComponent(draft, 0);
    // (1,2) became (0,1); (0,1) vanished with component 0; canvas pair shifted.
    expect(draft.loc[pairKey(0, 1)]).toBe("above");
    expect(draft.loc[pairKey(-1, 1)]).toBe("bottom-center");
    expect(Object.keys(draft.loc)).toHaveLength(2);
  });

  it("clears relations back to unspecified", () => {
    let draft = draftWith(["toolbar", "button"]);
    draft = setSize(draft, 0, 1, "smaller");
    draft = setSize(draft, 0, 1, null);
    expect(draft.size).toEqual({});
  });

  it("validates fixed sizes", () => {
    expect(validateFixedSize(0.5, 0.2)).toBeNull();
    expect(validateFixedSize(0, 0.2)).not.toBeNull();
    expect(validateFixedSize(0.5, 1.2)).not.toBeNull();
    expect(validateFixedSize(Number.NaN, 0.2)).not.toBeNull();
    let draft = draftWith(["toolbar"]);
    expect(() => setFixedSize(draft, 0, { w: 2, h: 0.5 })).toThrow();
    draft = setFixedSize(draft, 0, { w: 0.5, h: 0.25 });
    expect(draft.fixedSizes[0]).toEqual({ w: 0.5, h: 0.25 });
  });
});

describe("serialization", () => {
  it("round-trips the full draft", () => {
    let draft = draftWith(["toolbar", "button"]);
    draft = setLocation(draft, 0, 1, "above");
    draft = setFixedSize(draft, 1, { w: 0.4, h: 0.1 });
    draft = { ...draft, samples: 7, seed: 42 };
    expect(draftFromJson(draftToJson(draft))).toEqual(draft);
  });

  it("persists through storage", () => {
    sessionStorage.clear();
    let draft = draftWith(["toolbar"]);
    draft = setLocation(draft, -1, 0, "top-center");
    saveDraft(draft);
    expect(loadDraft()).toEqual(draft);
  });

  it("emits omitted pairs as absent entries", () => {
    let draft = draftWith(["toolbar", "button"]);
    draft = setLocation(draft, 0, 1, "above");
    const doc = toConstraintJson(draft);
    expect(doc.loc).toEqual([[0, "above", 1]]);
    expect(doc.size).toEqual([]);
  });
});

describe("emitted constraint JSON always validates (property over action sequences)", () => {
  // A deterministic linear congruential generator keeps the sequence reproducible.
  function lcg(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
      state = (state * 1664525 + 1013904223) >>> 0;
      return state / 2 ** 32;
    };
  }

  function randomAction(draft: ConstraintDraft, rand: () => number): ConstraintDraft {
    const pickable = CATEGORIES.filter((c) => c !== "canvas");
    const roll = rand();
    if (roll < 0.3 || draft.components.length === 0) {
      if (draft.components.length >= 6) return draft;
      return addComponent(draft, pickable[Math.floor(rand() * pickable.length)]);
    }
    if (roll < 0.4) {
      return removeComponent(draft, Math.floor(rand() * draft.components.length));
    }
    const pairs = allPairs(draft);
    const [i, j] = pairs[Math.floor(rand() * pairs.length)];
    if (roll < 0.7) {
      const vocab = i === -1 ? CANVAS_RELATIONS : COMPONENT_RELATIONS;
      const value = rand() < 0.15 ? null : vocab[Math.floor(rand() * vocab.length)];
      return setLocation(draft, i, j, value);
    }
    if (roll < 0.9) {
      const value = rand() < 0.15 ? null : SIZE_RELATIONS[Math.floor(rand() * SIZE_RELATIONS.length)];
      return setSize(draft, i, j, value);
    }
    const index = Math.floor(rand() * draft.components.length);
    return setFixedSize(draft, index, { w: 0.1 + rand() * 0.8, h: 0.1 + rand() * 0.8 });
  }

  it("holds across 100 random sequences of 30 actions", () => {
    for (let seed = 1; seed <= 100; seed++) {
      const rand = lcg(seed);
      let draft = emptyDraft(CATEGORIES);
      for (let step = 0; step < 30; step++) {
        draft = randomAction(draft, rand);
        const errors = validateConstraintGraph(toConstraintJson(draft));
        expect(errors, `seed ${seed} step ${step}: ${errors.join("; ")}`).toEqual([]);
      }
    }
  });
});

describe("schema validator rejects malformed documents", () => {
  it("flags bad indices, vocab, duplicates", () => {
    const base = { categories: CATEGORIES, components: ["toolbar", "button"] };
    expect(validateConstraintGraph({ ...base, loc: [[0, "above", 9]], size: [] })).not.toEqual([]);
    expect(validateConstraintGraph({ ...base, loc: [[0, "atop", 1]], size: [] })).not.toEqual([]);
    expect(
      validateConstraintGraph({ ...base, loc: [[0, "above", 1], [1, "below", 0]], size: [] }),
    ).not.toEqual([]);
    expect(validateConstraintGraph({ ...base, loc: [[0, "top-left", 1]], size: [] })).not.toEqual([]);
    expect(validateConstraintGraph({ ...base, loc: [], size: [[0, "tiny", 1]] })).not.toEqual([]);
    expect(validateConstraintGraph({ categories: ["box"], components: [] })).not.toEqual([]);
  });

  it("accepts a well-formed document", () => {
    expect(
      validateConstraintGraph({
        categories: CATEGORIES,
        components: ["toolbar", "button"],
        loc: [[-1, "top-center", 0], [0, "above", 1]],
        size: [[0, "larger", 1]],
      }),
    ).toEqual([]);
  });
});
