/** Wire types of the review service API. */

export type CellState = "true" | "false" | "uncertain";

/** JSON encoding of a cell: booleans for definitive states. */
export type CellValue = boolean | "uncertain";

export interface TaskSummary {
  report_id: string;
  status: "pending" | "in_review" | "done";
  version: number;
}

export interface TaskPayload {
  report_id: string;
  region: string;
  status: string;
  version: number;
  text: string;
  sheet: {
    report_id: string;
    region: string;
    provenance: string;
    assignments: Record<string, CellValue>;
  };
  template: { labels: string[]; hierarchy: [string, string][] };
  history: AdjudicationRecord[];
}

export interface AdjudicationRecord {
  label: string;
  previous: CellValue;
  corrected: CellValue;
  reviewer_id?: string;
  ts?: number;
  note?: string | null;
}

export interface ServiceError {
  code: string;
  message: string;
  details: unknown;
}

export function toCellState(value: CellValue): CellState {
  if (value === true) return "true";
  if (value === false) return "false";
  return "uncertain";
}

export function toCellValue(state: CellState): CellValue {
  if (state === "true") return true;
  if (state === "false") return false;
  return "uncertain";
}
