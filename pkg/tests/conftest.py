"""Shared fixtures: a known-good submission document factory.

The factory returns a fresh deep structure on every call so tests can
mutate their copy freely.
"""

import copy
import hashlib

import pytest

DOC_REF = hashlib.sha256(b"court order scan, ref WMC-2026-0817").hexdigest()


def make_submission(**overrides) -> dict:
    doc = {
        "requester": {
            "agent_name": "Mike Davies",
            "agent_email": "mike.davies@police.example",
            "agent_phone": "+44 20 7946 0000",
            "badge_id": "MD-4411",
            "superior_name": "Janet Okafor",
            "superior_contact": "j.okafor@police.example",
            "agency_name": "Metropolitan Police",
            "agency_country": "GB",
            "jurisdiction": "England and Wales",
        },
        "target": {
            "identifiers": [{"kind": "username", "value": "John Smith"}],
            "service_uri": "http://wwww.mydomain.com/fluxbb",
            "data_period": {
                "start": "2026-07-01T00:00:00.000Z",
                "end": "2026-08-01T00:00:00.000Z",
            },
        },
        "instruments": [
            {
                "kind": "court_order",
                "issuing_authority": "Westminster Magistrates' Court",
                "reference_number": "WMC-2026-0817",
                "document_refs": [DOC_REF],
            }
        ],
        "objective": "disclosure",
        "regime": "routine",
        "origin": {"kind": "domestic", "channel": None},
        "narrative": "Forum account suspected of coordinating fraud on the service.",
    }
    doc = copy.deepcopy(doc)
    for key, value in overrides.items():
        if value is None and key in doc:
            del doc[key]
        else:
            doc[key] = copy.deepcopy(value)
    return doc


@pytest.fixture
def submission() -> dict:
    return make_submission()
