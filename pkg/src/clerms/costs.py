"""Cost-reimbursement invoicing with exact integer-cent arithmetic.

Money is never a float anywhere in this module: hourly rates are integer
micro-units (1 dollar = 1_000_000), line and total costs are integer cents.
Hours are decimal strings/ints handled via ``decimal.Decimal``. Amounts in
European decimal-comma form ("24,27", "8.847,69") are accepted on input and
normalized.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_EVEN
from typing import Optional, Union

from .errors import NegativeInput, UnsupportedFormat

MICRO_PER_DOLLAR = 1_000_000

_MONEY_RE = re.compile(r"^-?[0-9][0-9.,']*$")

HoursLike = Union[str, int, Decimal]


def parse_hours(value: HoursLike) -> Decimal:
    """Decimal hours from a string or int. Floats are rejected."""
    if isinstance(value, bool) or isinstance(value, float):
        raise NegativeInput("hours must be a decimal string or integer, not a float")
    try:
        hours = Decimal(str(value))
    except ArithmeticError:
        raise NegativeInput(f"not a decimal hours value: {value!r}")
    if not hours.is_finite():
        raise NegativeInput(f"not a finite hours value: {value!r}")
    return hours


def parse_money_cents(value: Union[str, int]) -> int:
    """Parse an amount into integer cents.

    Integers are already cents. Strings are dollar amounts in either
    point-decimal ("1,940.40") or European comma-decimal ("1.940,40" /
    "8.847,69") form. With a single separator, 1-2 trailing digits read as
    decimals and exactly 3 as a thousands separator.
    """
    if isinstance(value, bool):
        raise UnsupportedFormat("not an amount")
    if isinstance(value, int):
        return value
    if not isinstance(value, str) or not _MONEY_RE.match(value.strip()):
        raise UnsupportedFormat(f"not an amount: {value!r}")
    s = value.strip().replace("'", "")
    negative = s.startswith("-")
    if negative:
        s = s[1:]

    def strip_thousands(text: str, sep: str) -> str:
        if not re.match(rf"^\d{{1,3}}(?:{re.escape(sep)}\d{{3}})*$", text):
            raise UnsupportedFormat(f"not an amount: {value!r}")
        return text.replace(sep, "")

    if "." in s and "," in s:
        # Rightmost separator is the decimal mark.
        decimal_mark = "." if s.rindex(".") > s.rindex(",") else ","
        thousands = "," if decimal_mark == "." else "."
        head, _, tail = s.rpartition(decimal_mark)
        s = strip_thousands(head, thousands) + "." + tail
    elif "," in s or "." in s:
        mark = "," if "," in s else "."
        head, _, tail = s.rpartition(mark)
        if s.count(mark) > 1 or len(tail) == 3:
            s = strip_thousands(s, mark)
        else:
            s = head + "." + tail

    try:
        dollars = Decimal(s)
    except ArithmeticError:
        raise UnsupportedFormat(f"not an amount: {value!r}")
    cents = (dollars * 100).quantize(Decimal(1), rounding=ROUND_HALF_EVEN)
    return -int(cents) if negative else int(cents)


def parse_rate_micro(value: Union[str, int]) -> int:
    """Hourly rate in integer micro-units (1 dollar = 1_000_000).

    Integers pass through as micro-units. Strings are dollar amounts
    ("0.077", "1.328") and must land exactly on a micro-unit.
    """
    if isinstance(value, bool):
        raise UnsupportedFormat("not a rate")
    if isinstance(value, int):
        return value
    if not isinstance(value, str) or not _MONEY_RE.match(value.strip()):
        raise UnsupportedFormat(f"not a rate: {value!r}")
    try:
        dollars = Decimal(value.strip())
    except ArithmeticError:
        raise UnsupportedFormat(f"not a rate: {value!r}")
    micro = dollars * MICRO_PER_DOLLAR
    if micro != micro.to_integral_value():
        raise UnsupportedFormat(f"rate finer than micro-units: {value!r}")
    return int(micro)


def format_cents(cents: int) -> str:
    """Point-decimal dollars string, e.g. 884769 -> '8847.69'."""
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"


def compute_line_cost(rate: int, hours: HoursLike, quantity: int) -> int:
    """Integer-cent cost of rate (micro-units/hour) x hours x quantity.

    Rounded half-even to cents, computed exactly in Decimal.
    """
    if not isinstance(rate, int) or isinstance(rate, bool):
        raise NegativeInput("rate must be an integer in micro-units")
    if not isinstance(quantity, int) or isinstance(quantity, bool):
        raise NegativeInput("quantity must be an integer")
    hours_dec = parse_hours(hours)
    if rate < 0:
        raise NegativeInput("rate must be >= 0")
    if hours_dec < 0:
        raise NegativeInput("hours must be >= 0")
    if quantity < 1:
        raise NegativeInput("quantity must be >= 1")
    micro_total = Decimal(rate) * hours_dec * quantity
    cents = (micro_total / Decimal(10_000)).quantize(Decimal(1), rounding=ROUND_HALF_EVEN)
    return int(cents)


@dataclass
class ResourceLine:
    name: str
    hourly_rate: int  # micro-units per hour
    hours: Decimal
    quantity: int
    line_cost: int  # cents, always recomputed from the other fields

    @classmethod
    def build(cls, name: str, hourly_rate: int, hours: HoursLike, quantity: int = 1) -> "ResourceLine":
        hours_dec = parse_hours(hours)
        cost = compute_line_cost(hourly_rate, hours_dec, quantity)
        return cls(name, hourly_rate, hours_dec, quantity, cost)

    @classmethod
    def flat_monthly(cls, name: str, amount: Union[str, int]) -> "ResourceLine":
        """A flat monthly charge, modeled as rate x 1 hour x 1."""
        cents = parse_money_cents(amount)
        return cls.build(name, cents * 10_000, Decimal(1), 1)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "hourly_rate": self.hourly_rate,
            "hours": str(self.hours),
            "quantity": self.quantity,
            "line_cost": self.line_cost,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ResourceLine":
        return cls.build(doc["name"], doc["hourly_rate"], doc["hours"], doc.get("quantity", 1))


@dataclass
class LaborLine:
    role: str
    hours: Decimal
    rate: int  # micro-units per hour
    cost: int  # cents

    @classmethod
    def build(cls, role: str, hours: HoursLike, rate: int) -> "LaborLine":
        hours_dec = parse_hours(hours)
        return cls(role, hours_dec, rate, compute_line_cost(rate, hours_dec, 1))

    def to_json(self) -> dict:
        return {"role": self.role, "hours": str(self.hours), "rate": self.rate, "cost": self.cost}

    @classmethod
    def from_json(cls, doc: dict) -> "LaborLine":
        return cls.build(doc["role"], doc["hours"], doc["rate"])


@dataclass
class Invoice:
    invoice_id: str
    case_id: Optional[str]
    resource_lines: list = field(default_factory=list)
    labor_lines: list = field(default_factory=list)
    support_fees: int = 0  # cents
    total: int = 0  # cents

    def to_json(self) -> dict:
        return {
            "invoice_id": self.invoice_id,
            "case_id": self.case_id,
            "resource_lines": [l.to_json() for l in self.resource_lines],
            "labor_lines": [l.to_json() for l in self.labor_lines],
            "support_fees": self.support_fees,
            "total": self.total,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Invoice":
        invoice = compute_invoice(
            [ResourceLine.from_json(l) for l in doc["resource_lines"]],
            [LaborLine.from_json(l) for l in doc.get("labor_lines", [])],
            doc.get("support_fees", 0),
            case_id=doc.get("case_id"),
            invoice_id=doc["invoice_id"],
        )
        return invoice


def compute_invoice(
    resource_lines: list,
    labor_lines: Optional[list] = None,
    support_fees: Union[str, int] = 0,
    case_id: Optional[str] = None,
    invoice_id: Optional[str] = None,
) -> Invoice:
    """Sum resource + labor lines + support fees, exact in integer cents."""
    labor_lines = labor_lines or []
    fees = parse_money_cents(support_fees)
    if fees < 0:
        raise NegativeInput("support fees must be >= 0")
    total = sum(l.line_cost for l in resource_lines) + sum(l.cost for l in labor_lines) + fees
    return Invoice(
        invoice_id=invoice_id or str(uuid.uuid4()),
        case_id=case_id,
        resource_lines=list(resource_lines),
        labor_lines=list(labor_lines),
        support_fees=fees,
        total=total,
    )


def invoice_from_document(doc: dict, invoice_id: Optional[str] = None) -> Invoice:
    """Build an invoice from a plain JSON document (API/CLI input shape).

    Resource lines may be given either computed ({hourly_rate, hours,
    quantity}) or flat ({amount} monthly charges).
    """
    resource_lines = []
    for raw in doc.get("resource_lines", []):
        if "amount" in raw:
            resource_lines.append(ResourceLine.flat_monthly(raw.get("name", ""), raw["amount"]))
        else:
            resource_lines.append(
                ResourceLine.build(
                    raw.get("name", ""),
                    parse_rate_micro(raw["hourly_rate"]),
                    raw["hours"],
                    raw.get("quantity", 1),
                )
            )
    labor_lines = [
        LaborLine.build(raw["role"], raw["hours"], parse_rate_micro(raw["rate"]))
        for raw in doc.get("labor_lines", [])
    ]
    return compute_invoice(
        resource_lines,
        labor_lines,
        doc.get("support_fees", 0),
        case_id=doc.get("case_id"),
        invoice_id=invoice_id,
    )
