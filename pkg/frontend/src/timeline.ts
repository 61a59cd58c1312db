/**
 * Requester timeline model.
 *
 * The timeline shows exactly the states the server recorded in the request's
 * history — nothing is inferred, predicted, or reordered client-side.  The
 * published transition table is used only to sanity-flag an edge the server
 * never defined (which would indicate a display bug, not a workflow event),
 * and timestamps are attached only where the server supplied one.
 */

import type { RequestView, TransitionRow } from "./types.js";

export interface TimelineEntry {
  /** Position in the history, oldest first. */
  index: number;
  state: string;
  /** Server timestamp when one exists for this step, else null. */
  at: string | null;
  /** Extra server-provided context (decision summaries, response kind). */
  note: string | null;
  /** Whether the edge leading here appears in the published transition table. */
  knownEdge: boolean;
  current: boolean;
}

export function buildTimeline(view: RequestView, transitions: TransitionRow[]): TimelineEntry[] {
  const edges = new Set(transitions.map((row) => `${row.state}>${row.successor}`));
  const decisions = [...view.decisions];
  const entries: TimelineEntry[] = [];

  view.history.forEach((state, index) => {
    let at: string | null = null;
    let note: string | null = null;

    if (index === 0 || state === "AwaitingDocuments") {
      at = view.request.submitted_at ?? null;
    }
    if (state === "Approved" || state === "Rejected" || state === "Challenged") {
      const decision = decisions.shift();
      if (decision !== undefined) {
        at = decision.decided_at;
        note = decision.public_summary !== "" ? decision.public_summary : null;
      }
    }
    if (state === "ResponseIssued" && view.response !== null) {
      at = typeof view.response["issued_at"] === "string" ? (view.response["issued_at"] as string) : null;
      note = `response: ${view.response.kind}`;
    }

    entries.push({
      index,
      state,
      at,
      note,
      knownEdge: index === 0 || edges.has(`${view.history[index - 1]}>${state}`),
      current: index === view.history.length - 1,
    });
  });

  return entries;
}

/** The request's authoritative current state, verbatim from the server. */
export function currentState(view: RequestView): string {
  return view.request.state.value;
}
