/**
 * Client-side mirror of the server's sub-category consistency rule: a child
 * finding may never outrank its broader category. Checking here lets the UI
 * reject an edit before any network round trip; the server re-checks anyway.
 */

import type { CellState } from "./types.js";

const SEVERITY: Record<CellState, number> = { true: 2, uncertain: 1, false: 0 };

export function severity(state: CellState): number {
  return SEVERITY[state];
}

export function findViolations(
  assignments: Record<string, CellState>,
  hierarchy: [string, string][],
): [string, string][] {
  const violations: [string, string][] = [];
  for (const [child, parent] of hierarchy) {
    const childState = assignments[child];
    const parentState = assignments[parent];
    if (childState === undefined || parentState === undefined) continue;
    if (SEVERITY[childState] > SEVERITY[parentState]) {
      violations.push([child, parent]);
    }
  }
  return violations;
}
