"""INI configuration: ports, data directory, workflow knobs, principals.

The path comes from (in order) an explicit argument, the ``CLERMS_CONFIG``
environment variable, or ``./clerms.ini``; a missing file yields defaults.
Principals are declared one section each::

    [principal:mike.davies]
    role = le_agent
    token = s3cret

Tokens never leave the config file — the service keeps only their SHA-256.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .auth import ROLES, Principal, credential_ref
from .errors import UnsupportedFormat

DEFAULT_PATH = "clerms.ini"
ENV_VAR = "CLERMS_CONFIG"


@dataclass
class Config:
    http_port: int = 8460
    agent_port: int = 8461
    data_dir: str = "./clerms-data"
    preservation_delay_days: int = 90
    ack_timeout_days: int = 30
    default_hours_per_month: int = 730
    principals: dict = field(default_factory=dict)  # principal_id -> Principal
    tokens: dict = field(default_factory=dict)  # credential_ref -> Principal

    def principal_for_token(self, token: str) -> Optional[Principal]:
        return self.tokens.get(credential_ref(token))


def load_config(path=None) -> Config:
    if path is None:
        path = os.environ.get(ENV_VAR, DEFAULT_PATH)
    path = Path(path)
    config = Config()
    if not path.exists():
        return config

    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise UnsupportedFormat(f"bad config file {path}: {exc}")

    if parser.has_section("server"):
        section = parser["server"]
        config.http_port = section.getint("http_port", config.http_port)
        config.agent_port = section.getint("agent_port", config.agent_port)
        config.data_dir = section.get("data_dir", config.data_dir)
    if parser.has_section("workflow"):
        section = parser["workflow"]
        config.preservation_delay_days = section.getint(
            "preservation_delay_days", config.preservation_delay_days
        )
        config.ack_timeout_days = section.getint("ack_timeout_days", config.ack_timeout_days)
    if parser.has_section("reporting"):
        config.default_hours_per_month = parser["reporting"].getint(
            "default_hours_per_month", config.default_hours_per_month
        )

    for section_name in parser.sections():
        if not section_name.startswith("principal:"):
            continue
        principal_id = section_name.split(":", 1)[1].strip()
        section = parser[section_name]
        role = section.get("role", "")
        token = section.get("token", "")
        if role not in ROLES:
            raise UnsupportedFormat(f"{section_name}: unknown role {role!r}")
        if not principal_id or not token:
            raise UnsupportedFormat(f"{section_name}: needs a name and a token")
        principal = Principal(principal_id, role, credential_ref(token))
        config.principals[principal_id] = principal
        config.tokens[principal.credential_ref] = principal
    return config
