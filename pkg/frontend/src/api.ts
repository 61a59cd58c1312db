/**
 * Thin typed client for the request-management HTTP API.
 *
 * Every call goes to /api/v1 with a bearer token.  Non-2xx responses become
 * ApiError values carrying the server's stable error identifier, the human
 * detail string, and — for rejected submissions — the complete field-error
 * list, so the UI can surface everything the server said at once.
 */

import type {
  ChainStatus,
  ErrorDocument,
  FieldError,
  RequestView,
  SubmissionSchema,
  SubmitResult,
  Ticket,
  TransitionRow,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  /** HTTP status of the failed call. */
  readonly status: number;
  /** Stable server error identifier ("ValidationErrors", "Forbidden", ...). */
  readonly code: string;
  /** Human-readable explanation from the server. */
  readonly detail: string;
  /** Full field-error list when the server rejected a submission. */
  readonly errors: FieldError[];

  constructor(status: number, doc: ErrorDocument) {
    super(`${doc.error}: ${doc.detail}`);
    this.name = "ApiError";
    this.status = status;
    this.code = doc.error;
    this.detail = doc.detail;
    this.errors = doc.errors ?? [];
  }
}

/** Base64-encode raw bytes without relying on Buffer or btoa. */
export function encodeBase64(bytes: Uint8Array): string {
  const alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  let out = "";
  for (let i = 0; i < bytes.length; i += 3) {
    const a = bytes[i]!;
    const b = i + 1 < bytes.length ? bytes[i + 1]! : 0;
    const c = i + 2 < bytes.length ? bytes[i + 2]! : 0;
    const triple = (a << 16) | (b << 8) | c;
    out += alphabet[(triple >> 18) & 63]! + alphabet[(triple >> 12) & 63]!;
    out += i + 1 < bytes.length ? alphabet[(triple >> 6) & 63]! : "=";
    out += i + 2 < bytes.length ? alphabet[triple & 63]! : "=";
  }
  return out;
}

export interface ClientOptions {
  baseUrl: string;
  token: string;
  /** Injectable transport, so tests can observe or stub network traffic. */
  fetchImpl?: FetchLike;
}

export class PortalClient {
  private readonly baseUrl: string;
  private readonly token: string;
  private readonly fetchImpl: FetchLike;

  constructor(options: ClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = {
      method,
      headers: {
        authorization: `Bearer ${this.token}`,
        ...(body === undefined ? {} : { "content-type": "application/json" }),
      },
    };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}/api/v1${path}`, init);
    if (!response.ok) {
      let doc: ErrorDocument;
      try {
        doc = (await response.json()) as ErrorDocument;
      } catch {
        doc = { error: "TransportError", detail: `http ${response.status}` };
      }
      throw new ApiError(response.status, doc);
    }
    return (await response.json()) as T;
  }

  // ---- schema / workflow -----------------------------------------------------

  fetchSchema(): Promise<SubmissionSchema> {
    return this.call<SubmissionSchema>("GET", "/schema/submission");
  }

  async fetchTransitions(): Promise<TransitionRow[]> {
    const doc = await this.call<{ transitions: TransitionRow[] }>("GET", "/workflow/transitions");
    return doc.transitions;
  }

  // ---- requests ----------------------------------------------------------------

  submitRequest(fields: Record<string, unknown>): Promise<SubmitResult> {
    return this.call<SubmitResult>("POST", "/requests", fields);
  }

  getRequest(requestId: string): Promise<RequestView> {
    return this.call<RequestView>("GET", `/requests/${requestId}`);
  }

  async listRequests(): Promise<RequestView[]> {
    const doc = await this.call<{ requests: RequestView[] }>("GET", "/requests");
    return doc.requests;
  }

  receiveDocuments(requestId: string, documentIds: string[]): Promise<{ state: string }> {
    return this.call("POST", `/requests/${requestId}/documents`, { document_ids: documentIds });
  }

  decide(
    requestId: string,
    body: {
      decision: string;
      rationale: string;
      response_data_class?: string;
      public_summary?: string;
      co_signers?: string[];
    },
  ): Promise<{ state: string; decision: unknown }> {
    return this.call("POST", `/requests/${requestId}/decision`, body);
  }

  acknowledge(requestId: string): Promise<{ state: string }> {
    return this.call("POST", `/requests/${requestId}/acknowledge`, {});
  }

  // ---- documents -----------------------------------------------------------------

  uploadDocument(content: Uint8Array, filename: string): Promise<{ doc_id: string }> {
    return this.call("POST", "/documents", {
      content_b64: encodeBase64(content),
      filename,
    });
  }

  // ---- tickets ---------------------------------------------------------------------

  getTicket(ticketId: string): Promise<Ticket> {
    return this.call("GET", `/tickets/${ticketId}`);
  }

  postTicketMessage(ticketId: string, body: string): Promise<{ messages: unknown[] }> {
    return this.call("POST", `/tickets/${ticketId}/messages`, { body });
  }

  // ---- evidence -----------------------------------------------------------------------

  verifyEvidence(evidenceId: string): Promise<ChainStatus> {
    return this.call("GET", `/evidence/${evidenceId}/verify`);
  }
}
