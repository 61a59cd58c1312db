"""Role matrix totality and enforcement."""

import pytest

from clerms.auth import ACTIONS, ROLE_MATRIX, ROLES, Principal, authorize, credential_ref, require
from clerms.errors import Forbidden, Unauthenticated


def principal(role, pid="p1"):
    return Principal(pid, role, credential_ref(f"token-{pid}"))


def test_matrix_is_total():
    """Every action names an explicit verdict for every role — no fallthrough."""
    assert len(ACTIONS) >= 30
    for action, row in ROLE_MATRIX.items():
        assert set(row) == set(ROLES), f"{action} row incomplete"
        for role, verdict in row.items():
            assert verdict in ("allow", "deny", "own"), (action, role, verdict)


def test_all_roles_enumerated():
    assert set(ROLES) == {
        "le_agent",
        "crisis_manager",
        "forensic_expert",
        "legal_advisor",
        "admin",
    }


@pytest.mark.parametrize(
    "role,action,expected",
    [
        ("le_agent", "request.submit", True),
        ("forensic_expert", "request.submit", False),
        ("crisis_manager", "request.decide", True),
        ("forensic_expert", "request.decide", False),
        ("admin", "request.decide", False),
        ("legal_advisor", "request.decide", False),
        ("crisis_manager", "request.escalate", True),
        ("forensic_expert", "request.escalate", False),
        ("forensic_expert", "logs.query", True),
        ("admin", "logs.query", False),
        ("crisis_manager", "logs.query", False),
        ("admin", "invoice.create", True),
        ("crisis_manager", "invoice.create", False),
        ("crisis_manager", "report.transparency", True),
        ("admin", "report.transparency", True),
        ("forensic_expert", "report.transparency", False),
        ("legal_advisor", "case.read", True),
        ("legal_advisor", "case.add_report", True),
        ("legal_advisor", "case.link_evidence", False),
        ("legal_advisor", "case.close", False),
        ("legal_advisor", "flow.launch", False),
        ("le_agent", "flow.launch", False),
        ("le_agent", "case.read", False),
        ("crisis_manager", "case.close", True),
        ("forensic_expert", "case.close", False),
        ("crisis_manager", "evidence.destroy", True),
        ("forensic_expert", "evidence.destroy", False),
    ],
)
def test_matrix_verdicts(role, action, expected):
    assert authorize(principal(role), action) is expected


def test_own_scope_le_agent_sees_only_own():
    owner = principal("le_agent", "alice")
    stranger = principal("le_agent", "bob")
    assert authorize(owner, "request.read", owner_id="alice")
    assert not authorize(stranger, "request.read", owner_id="alice")
    # staff read regardless of ownership
    assert authorize(principal("crisis_manager"), "request.read", owner_id="alice")


def test_own_without_owner_id_denies():
    assert not authorize(principal("le_agent"), "request.read")


def test_require_raises_forbidden():
    with pytest.raises(Forbidden):
        require(principal("le_agent"), "case.read")


def test_require_raises_unauthenticated_for_missing_principal():
    with pytest.raises(Unauthenticated):
        require(None, "case.read")


def test_unknown_action_denied():
    assert not authorize(principal("admin"), "no.such.action")


def test_credential_ref_is_sha256_hex():
    ref = credential_ref("secret-token")
    assert len(ref) == 64 and int(ref, 16) >= 0
    assert ref == credential_ref("secret-token")
    assert ref != credential_ref("other-token")


def test_le_agent_never_touches_staff_machinery():
    """External requesters have no path into evaluation, forensics, or admin."""
    p = principal("le_agent")
    for action in ACTIONS:
        if ROLE_MATRIX[action]["le_agent"] == "deny":
            assert not authorize(p, action, owner_id=p.principal_id)
