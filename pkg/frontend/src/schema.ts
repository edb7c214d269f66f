/** Client-side mirror of the service's constraint schema.
 *
 * Used by tests to prove that every draft state serializes to a document the
 * service will accept; the app itself never needs to re-derive semantics.
 */

import { CANVAS_RELATIONS, COMPONENT_RELATIONS, SIZE_RELATIONS } from "./types.js";

const COMPONENT_SET = new Set<string>(COMPONENT_RELATIONS);
const CANVAS_SET = new Set<string>(CANVAS_RELATIONS);
const SIZE_SET = new Set<string>(SIZE_RELATIONS);

export function validateConstraintGraph(doc: unknown): string[] {
  const errors: string[] = [];
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    return ["document must be an object"];
  }
  const obj = doc as Record<string, unknown>;
  const categories = obj.categories;
  if (!Array.isArray(categories) || categories.some((c) => typeof c !== "string")) {
    errors.push("categories: expected a list of names");
    return errors;
  }
  if (categories[0] !== "canvas") errors.push("categories: first entry must be 'canvas'");
  if (new Set(categories).size !== categories.length) errors.push("categories: names must be unique");
  const components = obj.components;
  if (!Array.isArray(components) || components.some((c) => typeof c !== "string")) {
    errors.push("components: expected a list of category names");
    return errors;
  }
  for (const [k, name] of components.entries()) {
    if (!categories.includes(name)) errors.push(`components[${k}]: unknown category '${name}'`);
    if (name === "canvas") errors.push(`components[${k}]: the canvas cannot be a component`);
  }
  const seen = { loc: new Set<string>(), size: new Set<string>() };
  for (const key of ["loc", "size"] as const) {
    const entries = obj[key] ?? [];
    if (!Array.isArray(entries)) {
      errors.push(`${key}: expected a list`);
      continue;
    }
    for (const [k, entry] of entries.entries()) {
      const where = `${key}[${k}]`;
      if (!Array.isArray(entry) || entry.length !== 3) {
        errors.push(`${where}: expected [i, relation, j]`);
        continue;
      }
      const [i, rel, j] = entry as [unknown, unknown, unknown];
      if (!Number.isInteger(i) || !Number.isInteger(j)) {
        errors.push(`${where}: indices must be integers`);
        continue;
      }
      const ii = i as number;
      const jj = j as number;
      for (const idx of [ii, jj]) {
        if (idx !== -1 && (idx < 0 || idx >= components.length)) {
          errors.push(`${where}: index ${idx} out of range`);
        }
      }
      if (ii === jj) errors.push(`${where}: self-relations are not allowed`);
      if (typeof rel !== "string") {
        errors.push(`${where}: relation must be a string`);
        continue;
      }
      if (key === "size") {
        if (!SIZE_SET.has(rel)) errors.push(`${where}: unknown size relation '${rel}'`);
      } else if (ii === -1 || jj === -1) {
        if (!CANVAS_SET.has(rel)) errors.push(`${where}: canvas edges need a canvas relation, got '${rel}'`);
        if (jj === -1) errors.push(`${where}: canvas edges must list the canvas first`);
      } else if (!COMPONENT_SET.has(rel)) {
        errors.push(`${where}: unknown component relation '${rel}'`);
      }
      const canonical = ii < jj ? `${ii}:${jj}` : `${jj}:${ii}`;
      if (seen[key].has(canonical)) errors.push(`${where}: duplicate pair`);
      seen[key].add(canonical);
    }
  }
  return errors;
}
