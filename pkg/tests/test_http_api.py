"""HTTP surface: auth, role gates, error mapping, scenario plumbing."""

import base64
import json
import urllib.error
import urllib.request

import pytest

from conftest import make_submission

from clerms.config import Config
from clerms.auth import Principal, credential_ref
from clerms.http_api import start_api_server
from clerms.service import ClermsService

SCAN = b"court order scan, ref WMC-2026-0817"

TOKENS = {
    "mike.davies": ("le_agent", "tok-mike"),
    "pat.kim": ("le_agent", "tok-pat"),
    "sofia.reyes": ("crisis_manager", "tok-sofia"),
    "ada.osei": ("forensic_expert", "tok-ada"),
    "lena.bauer": ("legal_advisor", "tok-lena"),
    "ops.root": ("admin", "tok-root"),
}


def build_config():
    config = Config()
    for name, (role, token) in TOKENS.items():
        principal = Principal(name, role, credential_ref(token))
        config.principals[name] = principal
        config.tokens[principal.credential_ref] = principal
    return config


@pytest.fixture
def api(tmp_path):
    service = ClermsService(tmp_path / "data")
    server = start_api_server(service, build_config())
    yield service, f"http://127.0.0.1:{server.port}"
    server.shutdown()
    server.server_close()


def call(base, method, path, who=None, body=None, raw=False):
    url = base + path
    data = None if body is None else json.dumps(body).encode()
    request = urllib.request.Request(url, data=data, method=method)
    if who is not None:
        request.add_header("Authorization", "Bearer " + TOKENS[who][1])
    if data is not None:
        request.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(request) as response:
            payload = response.read()
            return response.status, payload if raw else json.loads(payload)
    except urllib.error.HTTPError as exc:
        payload = exc.read()
        return exc.code, payload if raw else json.loads(payload)


def upload_scan(base, who="mike.davies"):
    status, doc = call(base, "POST", "/api/v1/documents", who,
                       {"content_b64": base64.b64encode(SCAN).decode(), "filename": "order.pdf"})
    assert status == 201
    return doc["doc_id"]


def submit(base, who="mike.davies", **overrides):
    upload_scan(base, who)
    status, doc = call(base, "POST", "/api/v1/requests", who, make_submission(**overrides))
    assert status == 201, doc
    return doc


# ---- auth --------------------------------------------------------------------


def test_missing_token_is_401(api):
    service, base = api
    status, doc = call(base, "GET", "/api/v1/requests")
    assert status == 401
    assert doc["error"] == "Unauthenticated"


def test_bad_token_is_401(api):
    service, base = api
    request = urllib.request.Request(base + "/api/v1/requests")
    request.add_header("Authorization", "Bearer nonsense")
    with pytest.raises(urllib.error.HTTPError) as info:
        urllib.request.urlopen(request)
    assert info.value.code == 401


def test_role_gate_le_agent_cannot_launch_flows(api):
    service, base = api
    status, doc = call(base, "POST", "/api/v1/flows", "mike.davies",
                       {"agent_id": "x", "kind": "ProcessList", "case_id": "y"})
    assert status == 403
    assert doc["error"] == "Forbidden"


# ---- request lifecycle over the wire ----------------------------------------------


def test_submit_creates_request_and_ticket(api):
    service, base = api
    doc = submit(base)
    assert doc["request_id"] in service.state.requests
    assert doc["ticket_id"] in service.state.tickets
    assert doc["request"]["request"]["state"]["value"] == "AwaitingDocuments"


def test_submission_errors_are_complete(api):
    service, base = api
    bad = make_submission(regime="emergency")
    del bad["requester"]["agent_email"]
    del bad["narrative"]  # emergency requests must explain the urgency
    bad["objective"] = "world domination"
    status, doc = call(base, "POST", "/api/v1/requests", "mike.davies", bad)
    assert status == 400
    assert doc["error"] == "ValidationErrors"
    fields = {e["field"] for e in doc["errors"]}
    assert {"requester.agent_email", "narrative", "objective"} <= fields


def test_owner_and_staff_views(api):
    service, base = api
    rid = submit(base)["request_id"]
    status, _ = call(base, "POST", f"/api/v1/requests/{rid}/documents", "ops.root", {})
    assert status == 200
    status, _ = call(base, "POST", f"/api/v1/requests/{rid}/decision", "sofia.reyes",
                     {"decision": "reject", "rationale": "internal doubts",
                      "public_summary": "insufficient legal basis"})
    assert status == 200

    status, view = call(base, "GET", f"/api/v1/requests/{rid}", "mike.davies")
    assert status == 200
    assert view["decisions"][0]["public_summary"] == "insufficient legal basis"
    assert "rationale" not in view["decisions"][0]

    status, staff_view = call(base, "GET", f"/api/v1/requests/{rid}", "sofia.reyes")
    assert staff_view["decisions"][0]["rationale"] == "internal doubts"

    status, doc = call(base, "GET", f"/api/v1/requests/{rid}", "pat.kim")
    assert status == 403  # another requester, not the owner


def test_request_listing_scoped_to_owner(api):
    service, base = api
    submit(base, "mike.davies")
    status, doc = call(base, "GET", "/api/v1/requests", "pat.kim")
    assert status == 200 and doc["requests"] == []
    status, doc = call(base, "GET", "/api/v1/requests", "sofia.reyes")
    assert len(doc["requests"]) == 1


def test_double_decision_is_409(api):
    service, base = api
    rid = submit(base)["request_id"]
    call(base, "POST", f"/api/v1/requests/{rid}/documents", "ops.root", {})
    body = {"decision": "approve", "rationale": "ok", "response_data_class": "content"}
    status, _ = call(base, "POST", f"/api/v1/requests/{rid}/decision", "sofia.reyes", body)
    assert status == 200
    status, doc = call(base, "POST", f"/api/v1/requests/{rid}/decision", "sofia.reyes", body)
    assert status == 409
    assert doc["error"] == "InvalidState"


def test_unknown_request_404(api):
    service, base = api
    status, doc = call(base, "GET", "/api/v1/requests/ffffffff-0000-0000-0000-000000000000",
                       "sofia.reyes")
    assert status == 404
    assert doc["error"] in ("NotFound", "UnknownRequest")


def test_unknown_route_404(api):
    service, base = api
    status, doc = call(base, "GET", "/api/v1/teapot", "ops.root")
    assert status == 404


# ---- cases and evidence over the wire ------------------------------------------------


def escalated_case(api):
    service, base = api
    rid = submit(base)["request_id"]
    call(base, "POST", f"/api/v1/requests/{rid}/documents", "ops.root", {})
    call(base, "POST", f"/api/v1/requests/{rid}/decision", "sofia.reyes",
         {"decision": "approve", "rationale": "ok", "response_data_class": "content"})
    status, case = call(base, "POST", f"/api/v1/requests/{rid}/escalate", "sofia.reyes", {})
    assert status == 201
    return rid, case["case_id"]


def test_legal_advisor_case_permissions(api):
    service, base = api
    rid, cid = escalated_case(api)
    status, case = call(base, "GET", f"/api/v1/cases/{cid}", "lena.bauer")
    assert status == 200 and case["case_id"] == cid

    status, doc = call(base, "POST", "/api/v1/documents", "lena.bauer",
                       {"content_b64": base64.b64encode(b"legal memo").decode(),
                        "filename": "memo.txt"})
    status, _ = call(base, "POST", f"/api/v1/cases/{cid}/reports", "lena.bauer",
                     {"doc_id": doc["doc_id"], "kind": "briefing_memo"})
    assert status == 201

    status, doc = call(base, "POST", f"/api/v1/cases/{cid}/evidence", "lena.bauer",
                       {"evidence_id": "0" * 64})
    assert status == 403  # attach documents yes, handle evidence no

    status, _ = call(base, "GET", f"/api/v1/cases/{cid}", "mike.davies")
    assert status == 403  # requester never sees the investigation


def test_case_tasks_and_close_over_http(api):
    service, base = api
    rid, cid = escalated_case(api)
    status, task = call(base, "POST", f"/api/v1/cases/{cid}/tasks", "sofia.reyes",
                        {"description": "triage host", "assignee_role": "forensic_expert"})
    assert status == 201
    status, doc = call(base, "POST", f"/api/v1/cases/{cid}/close", "sofia.reyes", {})
    assert status == 409  # open task blocks closure
    status, _ = call(base, "POST", f"/api/v1/cases/{cid}/tasks/{task['task_id']}",
                     "ada.osei", {"status": "done"})
    assert status == 200
    status, doc = call(base, "POST", f"/api/v1/cases/{cid}/close", "sofia.reyes", {})
    assert status == 200 and doc["status"] == "closed"


def test_evidence_verify_over_http(api):
    service, base = api
    item = service.store.store(b"captured bytes", format="raw")
    status, doc = call(base, "GET", f"/api/v1/evidence/{item.evidence_id}/verify", "ada.osei")
    assert status == 200
    assert doc["ok"] is True


# ---- reporting, invoices, logs ----------------------------------------------------------


def test_transparency_report_role_gate_and_csv(api):
    service, base = api
    query = "?from=2026-08-01T00:00:00.000Z&to=2026-09-01T00:00:00.000Z"
    status, doc = call(base, "GET", "/api/v1/reports/transparency" + query, "ada.osei")
    assert status == 403
    status, doc = call(base, "GET", "/api/v1/reports/transparency" + query, "sofia.reyes")
    assert status == 200 and doc["received"] == 0
    status, data = call(base, "GET", "/api/v1/reports/transparency" + query + "&format=csv",
                        "ops.root", raw=True)
    assert status == 200
    assert data.decode().splitlines()[0] == "section,key,value"


def test_bad_period_is_400(api):
    service, base = api
    status, doc = call(base, "GET", "/api/v1/reports/transparency?from=x&to=y", "ops.root")
    assert status == 400
    assert doc["error"] == "InvalidPeriod"


def test_invoice_endpoint_admin_only(api):
    service, base = api
    body = {"resource_lines": [{"name": "vm", "amount": "24,27"}]}
    status, doc = call(base, "POST", "/api/v1/invoices", "sofia.reyes", body)
    assert status == 403
    status, doc = call(base, "POST", "/api/v1/invoices", "ops.root", body)
    assert status == 201
    assert doc["total"] == 2427
    status, again = call(base, "GET", f"/api/v1/invoices/{doc['invoice_id']}", "sofia.reyes")
    assert status == 200 and again["total"] == 2427


def test_logs_query_expert_only(api):
    service, base = api
    service.ingest_logs([{"source": "forum", "timestamp": "2026-07-10T09:00:00.000Z",
                          "client_ip": "203.0.113.9", "message": "login", "attrs": {}}])
    status, doc = call(base, "GET", "/api/v1/logs/query?client_ip=203.0.113.9", "ada.osei")
    assert status == 200 and len(doc["records"]) == 1
    status, doc = call(base, "GET", "/api/v1/logs/query?client_ip=203.0.113.9", "ops.root")
    assert status == 403
    status, doc = call(base, "GET", "/api/v1/logs/query", "ada.osei")
    assert status == 400 and doc["error"] == "EmptyFilter"


# ---- meta --------------------------------------------------------------------------------


def test_workflow_transitions_exposed(api):
    service, base = api
    status, doc = call(base, "GET", "/api/v1/workflow/transitions", "mike.davies")
    assert status == 200
    assert {"state", "guard", "successor"} == set(doc["transitions"][0])


def test_submission_schema_exposed(api):
    service, base = api
    status, doc = call(base, "GET", "/api/v1/schema/submission", "mike.davies")
    assert status == 200
    assert {b["key"] for b in doc["blocks"]} == {
        "agent_contact",
        "superior_contact",
        "agency_contact",
        "legal_documents",
        "target_information",
    }


def test_notifications_staff_only(api):
    service, base = api
    submit(base)
    status, doc = call(base, "GET", "/api/v1/notifications", "sofia.reyes")
    assert status == 200 and doc["notifications"]
    status, _ = call(base, "GET", "/api/v1/notifications", "mike.davies")
    assert status == 403
