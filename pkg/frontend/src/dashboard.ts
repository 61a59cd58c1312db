/**
 * Staff-dashboard presentation helpers.
 *
 * These functions arrange and label server data for display; the ordering
 * and status semantics come from the server's own fields (priority labels,
 * chain-verification results, error identifiers).  Nothing here mutates or
 * re-derives workflow state.
 */

import { ApiError } from "./api.js";
import type { ChainStatus, RequestView } from "./types.js";

/**
 * Queue ordering for the staff dashboard: highest priority first
 * (p0_emergency, then p1_preservation, then p2_routine — the server's labels
 * sort in exactly that order), oldest submission first within a priority.
 * Returns a new array; the server's payload is left untouched.
 */
export function sortQueue(entries: RequestView[]): RequestView[] {
  return [...entries].sort((a, b) => {
    if (a.priority !== b.priority) {
      return a.priority < b.priority ? -1 : 1;
    }
    if (a.request.submitted_at !== b.request.submitted_at) {
      return a.request.submitted_at < b.request.submitted_at ? -1 : 1;
    }
    return a.request.request_id < b.request.request_id ? -1 : 1;
  });
}

export interface Badge {
  kind: "ok" | "broken";
  text: string;
}

/** Chain-of-custody badge for one evidence item, from the verify endpoint. */
export function chainBadge(status: ChainStatus): Badge {
  if (status.ok) {
    return { kind: "ok", text: "chain intact" };
  }
  return { kind: "broken", text: `chain broken at entry ${status.broken_at}` };
}

export interface Banner {
  kind: "forbidden" | "conflict" | "error";
  text: string;
}

/**
 * Non-destructive banner for a failed staff action.  A 403 or 409 leaves the
 * form and its contents exactly as they were; only this banner is shown.
 */
export function bannerFor(error: unknown): Banner {
  if (error instanceof ApiError) {
    if (error.status === 403) {
      return { kind: "forbidden", text: `not permitted: ${error.detail}` };
    }
    if (error.status === 409) {
      return { kind: "conflict", text: `state has moved on: ${error.detail}` };
    }
    return { kind: "error", text: `${error.code}: ${error.detail}` };
  }
  return { kind: "error", text: String(error) };
}
