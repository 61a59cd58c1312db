/**
 * Browser entry point: thin DOM wiring over the tested models.
 *
 * This file only moves values between DOM nodes and the models in wizard.ts,
 * timeline.ts, dashboard.ts and poller.ts; every rule lives in those modules
 * (and ultimately in the server).  It is deliberately framework-free.
 */

import { ApiError, PortalClient } from "./api.js";
import { bannerFor, chainBadge, sortQueue } from "./dashboard.js";
import { Poller } from "./poller.js";
import { buildTimeline, currentState } from "./timeline.js";
import type { RequestView, TransitionRow } from "./types.js";
import { SubmissionWizard } from "./wizard.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== "") {
    node.textContent = text;
  }
  return node;
}

function mount(): HTMLElement {
  const root = document.getElementById("portal");
  if (root === null) {
    throw new Error("missing #portal container");
  }
  return root;
}

function showBanner(root: HTMLElement, error: unknown): void {
  const banner = bannerFor(error);
  const node = el("div", { class: `banner banner-${banner.kind}` }, banner.text);
  root.prepend(node);
  setTimeout(() => node.remove(), 8000);
}

// ---- submission wizard --------------------------------------------------------

function renderWizard(root: HTMLElement, client: PortalClient): void {
  const wizard = new SubmissionWizard(client);
  const form = el("form", { class: "wizard" });
  root.append(form);

  void wizard.load().then(() => {
    for (const block of wizard.blocks) {
      const section = el("fieldset", { class: "block", "data-block": block.key });
      section.append(el("legend", {}, block.label));
      for (const field of block.fields) {
        if (field.type === "instrument_list" || field.type === "identifier_list") {
          section.append(el("p", { class: "hint" }, `${field.label}: add at least one entry below`));
          continue;
        }
        const label = el("label", {}, field.label);
        const input = el("input", { name: field.path });
        input.addEventListener("input", () => wizard.setField(field.path, input.value));
        label.append(input);
        section.append(label);
      }
      section.append(el("ul", { class: "errors", "data-errors": block.key }));
      form.append(section);
    }

    const identifierRow = el("div", { class: "row" });
    const idKind = el("input", { placeholder: "identifier kind (username, ip...)" });
    const idValue = el("input", { placeholder: "identifier value" });
    const idAdd = el("button", { type: "button" }, "add identifier");
    idAdd.addEventListener("click", () => {
      wizard.draft.target.identifiers.push({ kind: idKind.value, value: idValue.value });
      idKind.value = "";
      idValue.value = "";
    });
    identifierRow.append(idKind, idValue, idAdd);
    form.append(identifierRow);

    const instrumentRow = el("div", { class: "row" });
    const instKind = el("input", { placeholder: "instrument kind (court_order...)" });
    const instAuthority = el("input", { placeholder: "issuing authority" });
    const instRef = el("input", { placeholder: "reference number" });
    const instFile = el("input", { type: "file" });
    const instAdd = el("button", { type: "button" }, "add instrument + upload scan");
    instAdd.addEventListener("click", () => {
      wizard.draft.instruments.push({
        kind: instKind.value,
        issuing_authority: instAuthority.value,
        reference_number: instRef.value,
        document_refs: [],
      });
      const file = instFile.files?.[0];
      if (file !== undefined) {
        void file.arrayBuffer().then((buffer) =>
          wizard
            .attachDocument(new Uint8Array(buffer), file.name, wizard.draft.instruments.length - 1)
            .catch((error) => showBanner(root, error)),
        );
      }
    });
    instrumentRow.append(instKind, instAuthority, instRef, instFile, instAdd);
    form.append(instrumentRow);

    const requestRow = el("div", { class: "row" });
    for (const field of wizard.schema.request_fields) {
      const label = el("label", {}, field.path);
      if (field.values !== undefined) {
        const select = el("select", { name: field.path });
        select.append(el("option", { value: "" }, "--"));
        for (const value of field.values) {
          select.append(el("option", { value }, value));
        }
        select.addEventListener("change", () => wizard.setField(field.path, select.value));
        label.append(select);
      } else {
        const input = el("input", { name: field.path });
        input.addEventListener("input", () => wizard.setField(field.path, input.value));
        label.append(input);
      }
      requestRow.append(label);
    }
    form.append(requestRow);

    const submit = el("button", { type: "submit" }, "submit request");
    const outcome = el("p", { class: "outcome" });
    form.append(submit, outcome);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void wizard.submit().then((result) => {
        for (const block of wizard.blocks) {
          const list = form.querySelector(`[data-errors="${block.key}"]`);
          if (list === null) {
            continue;
          }
          list.replaceChildren(
            ...wizard.blockErrors(block.key).map((message) => el("li", {}, message)),
          );
        }
        if (result.ok) {
          outcome.textContent = `submitted: request ${result.result.request_id}`;
        } else if (result.reason === "incomplete") {
          outcome.textContent = `incomplete blocks: ${result.missingBlocks.join(", ")}`;
        } else if (result.reason === "rejected") {
          outcome.textContent = result.errors
            .map((entry) => `${entry.field}: ${entry.reason || entry.kind}`)
            .join("; ");
        } else {
          showBanner(root, result.error);
        }
      });
    });
  });
}

// ---- requester timeline ----------------------------------------------------------

function renderTimeline(root: HTMLElement, client: PortalClient, requestId: string): void {
  const container = el("section", { class: "timeline" });
  const heading = el("h2", {}, `request ${requestId}`);
  const list = el("ol");
  container.append(heading, list);
  root.append(container);

  let transitions: TransitionRow[] = [];
  void client.fetchTransitions().then((rows) => {
    transitions = rows;
  });

  const poller = new Poller(
    () => client.getRequest(requestId),
    (view) => {
      heading.textContent = `request ${requestId} — ${currentState(view)}`;
      list.replaceChildren(
        ...buildTimeline(view, transitions).map((entry) => {
          const item = el("li", { class: entry.current ? "current" : "" }, entry.state);
          if (entry.at !== null) {
            item.append(el("time", {}, ` ${entry.at}`));
          }
          if (entry.note !== null) {
            item.append(el("small", {}, ` ${entry.note}`));
          }
          return item;
        }),
      );
    },
    { onError: (error) => showBanner(root, error) },
  );
  poller.start();
}

// ---- staff dashboard ----------------------------------------------------------------

function renderQueue(root: HTMLElement, client: PortalClient): void {
  const container = el("section", { class: "queue" });
  container.append(el("h2", {}, "request queue"));
  const table = el("table");
  container.append(table);
  root.append(container);

  const poller = new Poller(
    () => client.listRequests(),
    (entries) => {
      table.replaceChildren(
        ...sortQueue(entries).map((entry: RequestView) => {
          const row = el("tr");
          row.append(
            el("td", {}, entry.priority),
            el("td", {}, entry.request.request_id),
            el("td", {}, entry.request.state.value),
            el("td", {}, entry.request.submitted_at),
          );
          const actions = el("td");
          const approve = el("button", { type: "button" }, "approve");
          approve.addEventListener("click", () => {
            void client
              .decide(entry.request.request_id, {
                decision: "approve",
                rationale: "approved from dashboard",
                response_data_class: "non_content",
              })
              .catch((error) => showBanner(root, error));
          });
          actions.append(approve);
          row.append(actions);
          return row;
        }),
      );
    },
    { onError: (error) => showBanner(root, error) },
  );
  poller.start();
}

function renderChainBadge(root: HTMLElement, client: PortalClient, evidenceId: string): void {
  void client
    .verifyEvidence(evidenceId)
    .then((status) => {
      const badge = chainBadge(status);
      root.append(el("span", { class: `badge badge-${badge.kind}` }, badge.text));
    })
    .catch((error) => showBanner(root, error));
}

// ---- boot ---------------------------------------------------------------------------------

function boot(): void {
  const root = mount();
  const params = new URLSearchParams(window.location.search);
  const token = params.get("token") ?? window.localStorage.getItem("portal_token") ?? "";
  if (token === "") {
    root.append(el("p", {}, "append ?token=... to sign in"));
    return;
  }
  window.localStorage.setItem("portal_token", token);
  const client = new PortalClient({ baseUrl: window.location.origin, token });

  const view = params.get("view") ?? "wizard";
  if (view === "wizard") {
    renderWizard(root, client);
  } else if (view === "timeline") {
    const requestId = params.get("request") ?? "";
    renderTimeline(root, client, requestId);
  } else if (view === "queue") {
    renderQueue(root, client);
  } else if (view === "evidence") {
    renderChainBadge(root, client, params.get("evidence") ?? "");
  }
}

if (typeof document !== "undefined") {
  boot();
}

export { boot, renderQueue, renderTimeline, renderWizard };
export type { ApiError };
