/**
 * Submission wizard model.
 *
 * The wizard renders the five form blocks straight from the schema document
 * the server publishes, and its completeness rules are derived from that same
 * document — the portal never hard-codes a field list of its own.  A draft
 * with any block incomplete is refused locally, with inline errors and no
 * network traffic.  When the server rejects a submission anyway, every field
 * error it returned is surfaced at once, mapped back onto the blocks.
 *
 * Nothing here is optimistic: the wizard reports success only after the
 * server has confirmed the submission.
 */

import { ApiError, PortalClient } from "./api.js";
import type {
  FieldError,
  RequestField,
  SchemaBlock,
  SchemaField,
  SubmissionDraft,
  SubmissionSchema,
  SubmitResult,
} from "./types.js";
import { emptyDraft } from "./types.js";

/**
 * Largest document the wizard will attach, in raw bytes.  The server caps
 * request bodies at 32 MiB; base64 inflates by 4/3, so 16 MiB of file content
 * (~21.4 MiB encoded) always fits with room for the JSON envelope.
 */
export const MAX_DOCUMENT_BYTES = 16 * 1024 * 1024;

type WizardClient = Pick<PortalClient, "fetchSchema" | "submitRequest" | "uploadDocument">;

export type SubmitOutcome =
  | { ok: true; result: SubmitResult }
  | { ok: false; reason: "incomplete"; missingBlocks: string[] }
  | { ok: false; reason: "rejected"; errors: FieldError[] }
  | { ok: false; reason: "failed"; error: ApiError };

export class SubmissionWizard {
  readonly draft: SubmissionDraft = emptyDraft();

  /** Inline messages keyed by field path, both local and server-reported. */
  readonly fieldErrors = new Map<string, string[]>();

  /** The server's complete field-error list from the last rejected submit. */
  serverErrors: FieldError[] = [];

  /** "editing" until a submit succeeds; never flips early. */
  status: "editing" | "submitting" | "submitted" = "editing";

  result: SubmitResult | null = null;

  private schemaDoc: SubmissionSchema | null = null;

  constructor(private readonly client: WizardClient) {}

  /** Fetch the schema the form and its validation rules are generated from. */
  async load(): Promise<void> {
    this.schemaDoc = await this.client.fetchSchema();
  }

  get schema(): SubmissionSchema {
    if (this.schemaDoc === null) {
      throw new Error("wizard not loaded; call load() first");
    }
    return this.schemaDoc;
  }

  get blocks(): SchemaBlock[] {
    return this.schema.blocks;
  }

  // ---- draft editing -----------------------------------------------------------

  /** Set a value by its schema path ("requester.agent_name", "objective"...). */
  setField(path: string, value: unknown): void {
    const parts = path.split(".");
    let node: Record<string, unknown> = this.draft as unknown as Record<string, unknown>;
    for (const part of parts.slice(0, -1)) {
      if (typeof node[part] !== "object" || node[part] === null) {
        node[part] = {};
      }
      node = node[part] as Record<string, unknown>;
    }
    node[parts[parts.length - 1]!] = value;
    this.fieldErrors.delete(path);
  }

  private valueAt(path: string): unknown {
    let node: unknown = this.draft;
    for (const part of path.split(".")) {
      if (typeof node !== "object" || node === null) {
        return undefined;
      }
      node = (node as Record<string, unknown>)[part];
    }
    return node;
  }

  // ---- completeness, derived from the schema -------------------------------------

  private fieldMissing(field: SchemaField): boolean {
    const value = this.valueAt(field.path);
    if (field.type === "instrument_list" || field.type === "identifier_list") {
      return !Array.isArray(value) || value.length === 0;
    }
    if (!field.required) {
      return false;
    }
    return typeof value !== "string" || value.trim() === "";
  }

  /** Local inline errors for one block of the form. */
  blockErrors(key: string): string[] {
    const block = this.blocks.find((b) => b.key === key);
    if (block === undefined) {
      return [];
    }
    const messages: string[] = [];
    for (const field of block.fields) {
      if (field.required && this.fieldMissing(field)) {
        messages.push(`${field.label} is required`);
      }
      for (const inline of this.fieldErrors.get(field.path) ?? []) {
        messages.push(inline);
      }
    }
    return messages;
  }

  blockComplete(key: string): boolean {
    const block = this.blocks.find((b) => b.key === key);
    if (block === undefined) {
      return false;
    }
    return block.fields.every((field) => !field.required || !this.fieldMissing(field));
  }

  /** Keys of every block that would make the server reject the draft. */
  missingBlocks(): string[] {
    return this.blocks.filter((block) => !this.blockComplete(block.key)).map((block) => block.key);
  }

  private requiredNow(field: RequestField): boolean {
    if (field.required) {
      return true;
    }
    if (field.required_if === undefined) {
      return false;
    }
    return Object.entries(field.required_if).every(([path, value]) => this.valueAt(path) === value);
  }

  /** Request-level fields (objective, regime, origin, narrative) still unset. */
  missingRequestFields(): string[] {
    const missing: string[] = [];
    for (const field of this.schema.request_fields) {
      if (!this.requiredNow(field)) {
        continue;
      }
      const value = this.valueAt(field.path);
      if (typeof value !== "string" || value.trim() === "") {
        missing.push(field.path);
      }
    }
    return missing;
  }

  // ---- document attachment ---------------------------------------------------------

  /**
   * Upload a scanned legal document and attach it to one instrument.  Files
   * over the size cap are refused inline without touching the network.
   */
  async attachDocument(
    content: Uint8Array,
    filename: string,
    instrumentIndex: number,
  ): Promise<{ ok: boolean; documentId?: string }> {
    if (content.length > MAX_DOCUMENT_BYTES) {
      const limitMib = MAX_DOCUMENT_BYTES / (1024 * 1024);
      this.pushFieldError(
        "instruments",
        `${filename} is too large (${content.length} bytes; limit ${limitMib} MiB)`,
      );
      return { ok: false };
    }
    const uploaded = await this.client.uploadDocument(content, filename);
    const instrument = this.draft.instruments[instrumentIndex];
    if (instrument === undefined) {
      throw new Error(`no instrument at index ${instrumentIndex}`);
    }
    instrument.document_refs.push(uploaded.doc_id);
    return { ok: true, documentId: uploaded.doc_id };
  }

  // ---- submit ------------------------------------------------------------------------

  private toPayload(): Record<string, unknown> {
    const payload: Record<string, unknown> = {
      requester: { ...this.draft.requester },
      target: {
        identifiers: this.draft.target.identifiers,
        ...(this.draft.target.service_uri !== undefined
          ? { service_uri: this.draft.target.service_uri }
          : {}),
        ...(this.draft.target.data_period !== undefined
          ? { data_period: this.draft.target.data_period }
          : {}),
      },
      instruments: this.draft.instruments,
      objective: this.draft.objective,
      regime: this.draft.regime,
      origin: { kind: this.draft.origin.kind, channel: this.draft.origin.channel ?? null },
    };
    if (this.draft.narrative !== undefined) {
      payload["narrative"] = this.draft.narrative;
    }
    return payload;
  }

  /**
   * Submit the draft.  Refuses locally — no network call — while any block or
   * required request field is missing; otherwise posts and either records the
   * confirmed submission or surfaces the server's complete error list.
   */
  async submit(): Promise<SubmitOutcome> {
    const missing = [...this.missingBlocks()];
    for (const path of this.missingRequestFields()) {
      this.pushFieldError(path, `${path} is required`);
      missing.push(path);
    }
    if (missing.length > 0) {
      for (const key of this.missingBlocks()) {
        // blockErrors() already reports the per-field messages; keep a block-level
        // marker so the UI can badge the step header too.
        this.pushFieldError(key, "block is incomplete");
      }
      return { ok: false, reason: "incomplete", missingBlocks: missing };
    }

    this.status = "submitting";
    try {
      const result = await this.client.submitRequest(this.toPayload());
      this.status = "submitted";
      this.result = result;
      this.serverErrors = [];
      return { ok: true, result };
    } catch (error) {
      this.status = "editing";
      if (error instanceof ApiError && error.code === "ValidationErrors") {
        this.applyServerErrors(error.errors);
        return { ok: false, reason: "rejected", errors: error.errors };
      }
      if (error instanceof ApiError) {
        return { ok: false, reason: "failed", error };
      }
      throw error;
    }
  }

  /** Map every server field error onto the form, replacing stale ones. */
  applyServerErrors(errors: FieldError[]): void {
    this.serverErrors = errors;
    for (const entry of errors) {
      this.pushFieldError(entry.field, entry.reason !== "" ? entry.reason : entry.kind);
    }
  }

  /** Which block an error path belongs to, for step-level highlighting. */
  blockForField(path: string): string | null {
    const bare = path.replace(/\[\d+\]/g, "");
    for (const block of this.blocks) {
      for (const field of block.fields) {
        if (bare === field.path || bare.startsWith(`${field.path}.`)) {
          return block.key;
        }
      }
    }
    return null;
  }

  private pushFieldError(path: string, message: string): void {
    const existing = this.fieldErrors.get(path) ?? [];
    if (!existing.includes(message)) {
      existing.push(message);
    }
    this.fieldErrors.set(path, existing);
  }
}
