/**
 * Local test doubles.  The schema fixture mirrors the document the live
 * server publishes at /api/v1/schema/submission; the integration suite
 * exercises the real one, so any drift shows up there.
 */

import { vi } from "vitest";
import type {
  RequestView,
  SubmissionSchema,
  SubmitResult,
  TransitionRow,
} from "../src/types.js";
import type { SubmissionWizard } from "../src/wizard.js";

export function schemaFixture(): SubmissionSchema {
  return {
    version: 1,
    blocks: [
      {
        key: "agent_contact",
        label: "Agent contact information",
        fields: [
          { path: "requester.agent_name", label: "Agent name", type: "text", required: true },
          { path: "requester.agent_email", label: "Agent email", type: "email", required: true },
          { path: "requester.agent_phone", label: "Agent phone", type: "text", required: true },
          { path: "requester.badge_id", label: "Badge id", type: "text", required: true },
        ],
      },
      {
        key: "superior_contact",
        label: "Superior contact information",
        fields: [
          { path: "requester.superior_name", label: "Superior name", type: "text", required: true },
          { path: "requester.superior_contact", label: "Superior contact", type: "text", required: true },
        ],
      },
      {
        key: "agency_contact",
        label: "Agency contact information",
        fields: [
          { path: "requester.agency_name", label: "Agency name", type: "text", required: true },
          { path: "requester.agency_country", label: "Agency country (ISO-3166 alpha-2)", type: "country", required: true },
          { path: "requester.jurisdiction", label: "Jurisdiction", type: "text", required: true },
        ],
      },
      {
        key: "legal_documents",
        label: "Legal documents",
        fields: [
          {
            path: "instruments",
            label: "Legal instruments with scanned documents",
            type: "instrument_list",
            required: true,
            kinds: ["court_order", "subpoena", "warrant", "mlat_request", "preservation_order", "other"],
          },
        ],
      },
      {
        key: "target_information",
        label: "Target information",
        fields: [
          {
            path: "target.identifiers",
            label: "Target identifiers",
            type: "identifier_list",
            required: true,
            kinds: ["username", "email", "ip", "phone", "account_id", "device_id"],
          },
          { path: "target.service_uri", label: "Service URI", type: "uri", required: false },
          { path: "target.data_period", label: "Data period", type: "period", required: false },
        ],
      },
    ],
    request_fields: [
      { path: "objective", type: "enum", values: ["disclosure", "preservation", "removal"], required: true },
      { path: "regime", type: "enum", values: ["routine", "emergency"], required: true },
      { path: "origin.kind", type: "enum", values: ["domestic", "foreign"], required: true },
      {
        path: "origin.channel",
        type: "enum",
        values: ["mlat", "letter_rogatory", "direct_cooperation", "emergency_disclosure"],
        required: false,
        required_if: { "origin.kind": "foreign" },
      },
      { path: "narrative", type: "text", required: false, required_if: { regime: "emergency" } },
    ],
  };
}

export const DOC_REF = "a".repeat(64);

/** Fill every block and request field of a loaded wizard. */
export function fillDraft(wizard: SubmissionWizard): void {
  wizard.setField("requester.agent_name", "Mike Davies");
  wizard.setField("requester.agent_email", "mike.davies@police.example");
  wizard.setField("requester.agent_phone", "+44 20 7946 0000");
  wizard.setField("requester.badge_id", "MD-4411");
  wizard.setField("requester.superior_name", "Janet Okafor");
  wizard.setField("requester.superior_contact", "j.okafor@police.example");
  wizard.setField("requester.agency_name", "Metropolitan Police");
  wizard.setField("requester.agency_country", "GB");
  wizard.setField("requester.jurisdiction", "England and Wales");
  wizard.draft.instruments.push({
    kind: "court_order",
    issuing_authority: "Westminster Magistrates' Court",
    reference_number: "WMC-2026-0817",
    document_refs: [DOC_REF],
  });
  wizard.draft.target.identifiers.push({ kind: "username", value: "John Smith" });
  wizard.setField("objective", "disclosure");
  wizard.setField("regime", "routine");
  wizard.setField("origin.kind", "domestic");
}

export function submitResultFixture(): SubmitResult {
  return {
    request_id: "11111111-1111-4111-8111-111111111111",
    ticket_id: "22222222-2222-4222-8222-222222222222",
    request: viewFixture(),
  };
}

export function viewFixture(overrides: Partial<RequestView> = {}): RequestView {
  return {
    request: {
      request_id: "11111111-1111-4111-8111-111111111111",
      requester: {
        agent_name: "Mike Davies",
        agent_email: "mike.davies@police.example",
        agent_phone: "+44 20 7946 0000",
        badge_id: "MD-4411",
        superior_name: "Janet Okafor",
        superior_contact: "j.okafor@police.example",
        agency_name: "Metropolitan Police",
        agency_country: "GB",
        jurisdiction: "England and Wales",
      },
      target: { identifiers: [{ kind: "username", value: "John Smith" }] },
      instruments: [
        {
          kind: "court_order",
          issuing_authority: "Westminster Magistrates' Court",
          reference_number: "WMC-2026-0817",
          document_refs: [DOC_REF],
        },
      ],
      objective: "disclosure",
      regime: "routine",
      origin: { kind: "domestic", channel: null },
      narrative: null,
      state: { value: "AwaitingDocuments" },
      submitted_at: "2026-08-17T10:00:00.000Z",
    },
    priority: "p2_routine",
    history: ["PreSubmitted", "AwaitingDocuments"],
    decisions: [],
    provisional: null,
    response: null,
    documents: [],
    ...overrides,
  };
}

/** The published transition table, as rows of {state, guard, successor}. */
export function transitionsFixture(): TransitionRow[] {
  const rows: Array<[string, string, string]> = [
    ["PreSubmitted", "always", "AwaitingDocuments"],
    ["AwaitingDocuments", "always", "DocumentsReceived"],
    ["DocumentsReceived", "decision_approve", "Approved"],
    ["DocumentsReceived", "decision_reject", "Rejected"],
    ["DocumentsReceived", "decision_challenge", "Challenged"],
    ["UnderEvaluation", "decision_approve", "Approved"],
    ["UnderEvaluation", "decision_reject", "Rejected"],
    ["Challenged", "not_reopened", "UnderEvaluation"],
    ["Challenged", "always", "ResponseIssued"],
    ["Approved", "escalatable", "Escalated"],
    ["Approved", "always", "ActionApplied"],
    ["Escalated", "always", "ActionApplied"],
    ["Rejected", "always", "ResponseIssued"],
    ["ActionApplied", "always", "ResponseIssued"],
    ["ResponseIssued", "ack_or_timeout", "Closed"],
  ];
  return rows.map(([state, guard, successor]) => ({ state, guard, successor }));
}

export interface FakeClient {
  fetchSchema: ReturnType<typeof vi.fn>;
  submitRequest: ReturnType<typeof vi.fn>;
  uploadDocument: ReturnType<typeof vi.fn>;
}

export function fakeClient(): FakeClient {
  return {
    fetchSchema: vi.fn(async () => schemaFixture()),
    submitRequest: vi.fn(async () => submitResultFixture()),
    uploadDocument: vi.fn(async () => ({ doc_id: "b".repeat(64) })),
  };
}
