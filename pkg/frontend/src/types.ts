/**
 * Shared type definitions mirroring the JSON documents the request-management
 * HTTP API produces and consumes.  The portal never invents structure of its
 * own: everything here is a faithful transcription of a server payload.
 */

// ---- submission schema (GET /api/v1/schema/submission) ---------------------

/** One input inside a form block. */
export interface SchemaField {
  path: string;
  label: string;
  type: string;
  required: boolean;
  /** Allowed kinds for list-typed fields (instrument_list, identifier_list). */
  kinds?: string[];
}

/** One of the five form blocks the wizard renders. */
export interface SchemaBlock {
  key: string;
  label: string;
  fields: SchemaField[];
}

/** A request-level field outside the blocks (objective, regime, origin...). */
export interface RequestField {
  path: string;
  type: string;
  required: boolean;
  values?: string[];
  /** Map of {other field path: value} that makes this field mandatory. */
  required_if?: Record<string, string>;
}

export interface SubmissionSchema {
  version: number;
  blocks: SchemaBlock[];
  request_fields: RequestField[];
}

// ---- error documents --------------------------------------------------------

/** One field-level problem inside a ValidationErrors response. */
export interface FieldError {
  kind: string; // "MissingField" | "InvalidFormat"
  field: string;
  reason: string;
}

/** Body shape of every non-2xx response. */
export interface ErrorDocument {
  error: string;
  detail: string;
  errors?: FieldError[];
}

// ---- request documents -------------------------------------------------------

export interface Identifier {
  kind: string;
  value: string;
}

export interface Instrument {
  kind: string;
  issuing_authority: string;
  reference_number: string;
  document_refs: string[];
  qualifier?: string | null;
}

export interface RequesterBlock {
  agent_name: string;
  agent_email: string;
  agent_phone: string;
  badge_id: string;
  superior_name: string;
  superior_contact: string;
  agency_name: string;
  agency_country: string;
  jurisdiction: string;
}

export interface TargetBlock {
  identifiers: Identifier[];
  service_uri?: string | null;
  data_period?: { start: string; end: string } | null;
}

export interface RequestDocument {
  request_id: string;
  requester: RequesterBlock;
  target: TargetBlock;
  instruments: Instrument[];
  objective: string;
  regime: string;
  origin: { kind: string; channel: string | null };
  narrative: string | null;
  state: { value: string };
  submitted_at: string;
}

/** Redacted decision entry as shown to the requester. */
export interface DecisionView {
  decision: string;
  decided_at: string;
  response_data_class: string | null;
  public_summary: string;
}

export interface ResponseDocument {
  kind: string;
  data_class: string;
  issued_at?: string;
  [extra: string]: unknown;
}

/**
 * What GET /requests/{id} returns.  Requesters receive the redacted subset;
 * staff additionally see owner / case linkage / full decisions.
 */
export interface RequestView {
  request: RequestDocument;
  priority: string;
  history: string[];
  decisions: DecisionView[];
  provisional: unknown;
  response: ResponseDocument | null;
  documents: string[];
  owner?: string;
  case_id?: string | null;
}

export interface SubmitResult {
  request_id: string;
  ticket_id: string;
  request: RequestView;
}

// ---- workflow table (GET /api/v1/workflow/transitions) ----------------------

export interface TransitionRow {
  state: string;
  guard: string;
  successor: string;
}

// ---- tickets -----------------------------------------------------------------

export interface TicketMessage {
  author: string;
  body: string;
  timestamp: string;
  system: boolean;
}

export interface Ticket {
  ticket_id: string;
  request_id: string;
  priority: string;
  status: string;
  messages: TicketMessage[];
}

// ---- evidence ----------------------------------------------------------------

export interface ChainStatus {
  ok: boolean;
  broken_at?: number;
}

// ---- wizard form state ---------------------------------------------------------

/**
 * The draft a requester edits.  Field paths match the schema document
 * ("requester.agent_name", "target.identifiers", "instruments", ...).
 */
export interface SubmissionDraft {
  requester: Partial<RequesterBlock>;
  target: { identifiers: Identifier[]; service_uri?: string; data_period?: { start: string; end: string } };
  instruments: Instrument[];
  objective?: string;
  regime?: string;
  origin: { kind?: string; channel?: string | null };
  narrative?: string;
}

export function emptyDraft(): SubmissionDraft {
  return {
    requester: {},
    target: { identifiers: [] },
    instruments: [],
    origin: {},
  };
}
