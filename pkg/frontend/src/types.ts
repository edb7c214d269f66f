/** Wire formats shared with the layout service. */

export const COMPONENT_RELATIONS = [
  "above",
  "below",
  "left-of",
  "right-of",
  "upper-left-of",
  "upper-right-of",
  "lower-left-of",
  "lower-right-of",
  "surrounding",
  "inside",
] as const;

export const CANVAS_RELATIONS = [
  "top-left",
  "top-center",
  "top-right",
  "center-left",
  "center",
  "center-right",
  "bottom-left",
  "bottom-center",
  "bottom-right",
] as const;

export const SIZE_RELATIONS = ["smaller", "equal", "larger"] as const;

export type ComponentRelation = (typeof COMPONENT_RELATIONS)[number];
export type CanvasRelation = (typeof CANVAS_RELATIONS)[number];
export type SizeRelation = (typeof SIZE_RELATIONS)[number];

/** [i, relation, j] with component indices; -1 addresses the canvas. */
export type RelationEntry = [number, string, number];

export interface ConstraintGraphJson {
  categories: string[];
  components: string[];
  loc: RelationEntry[];
  size: RelationEntry[];
}

export interface LayoutComponentJson {
  category: string;
  bbox: [number, number, number, number];
}

export interface LayoutJson {
  canvas_px: [number, number];
  components: LayoutComponentJson[];
}

export interface ConstraintReportRow {
  kind: "loc" | "size";
  i: number;
  j: number;
  requested: string;
  extracted: string;
  ok: boolean;
}

export interface GenerateResponse {
  layouts: LayoutJson[];
  consistency: number[];
  reports: ConstraintReportRow[][];
  seed: number;
  checkpoint: string;
}

export interface RecommendResponse {
  boxes: [number, number, number, number][];
  targets: string[];
  checkpoint: string;
}

export interface CategoriesResponse {
  categories: string[];
}

export interface ServiceError {
  field: string;
  message: string;
}
