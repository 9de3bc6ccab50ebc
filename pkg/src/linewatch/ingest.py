"""Pipe-delimited invoice ingestion: line-items, cases, corpus assembly."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal, InvalidOperation
from pathlib import Path

FIELD_NAMES = (
    "line_id",
    "invoice_id",
    "case_id",
    "service_date",
    "item_type",
    "task_code",
    "activity_code",
    "expense_code",
    "timekeeper_id",
    "timekeeper_role",
    "hours",
    "rate",
    "total",
    "description",
)

CASE_FIELD_NAMES = ("case_id", "category", "open_date")

ITEM_TYPES = ("FEE", "EXPENSE")
ROLES = ("PARTNER", "ASSOCIATE", "PARALEGAL", "OTHER")

# UTBMS-style codes: one letter followed by exactly three digits.
_CODE_RE = re.compile(r"^[A-Za-z][0-9]{3}$")

# |hours*rate - total| beyond this is treated as a math mismatch, not a reject.
MONEY_TOLERANCE = Decimal("0.01")

FLAG_MATH_MISMATCH = "MATH_MISMATCH"
FLAG_REJECTED_DATE = "REJECTED_SERVICE_BEFORE_OPEN"


class ParseError(ValueError):
    """Malformed invoice or case-manifest file."""


class ValidationError(ValueError):
    """Corpus-level contract violation (duplicate ids, unknown case refs)."""


@dataclass
class LineItem:
    line_id: str
    invoice_id: str
    case_id: str
    service_date: date
    item_type: str
    task_code: str
    activity_code: str
    expense_code: str
    timekeeper_id: str
    timekeeper_role: str
    hours: Decimal
    rate: Decimal
    total: Decimal
    description: str

    def to_pipe(self) -> str:
        return "|".join(
            (
                self.line_id,
                self.invoice_id,
                self.case_id,
                self.service_date.isoformat(),
                self.item_type,
                self.task_code,
                self.activity_code,
                self.expense_code,
                self.timekeeper_id,
                self.timekeeper_role,
                str(self.hours),
                str(self.rate),
                str(self.total),
                self.description,
            )
        )


@dataclass
class Case:
    case_id: str
    category: str
    open_date: date
    items: list[LineItem] = field(default_factory=list)


@dataclass
class ValidationFlag:
    line_id: str
    flag: str
    detail: str


@dataclass
class Corpus:
    cases: list[Case]
    ingest_manifest: dict = field(default_factory=dict)

    def total_items(self) -> int:
        return sum(len(c.items) for c in self.cases)

    def all_items(self):
        for case in self.cases:
            yield from case.items


def _parse_date(raw: str, line_no: int, column: str) -> date:
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise ParseError(f"line {line_no}, column {column}: unreadable date {raw!r}")


def _parse_decimal(raw: str, line_no: int, column: str) -> Decimal:
    try:
        value = Decimal(raw)
    except InvalidOperation:
        raise ParseError(f"line {line_no}, column {column}: unreadable decimal {raw!r}")
    if value < 0:
        raise ParseError(f"line {line_no}, column {column}: negative value {raw!r}")
    return value


def parse_invoice_line(raw: str, line_no: int) -> LineItem:
    fields = [f.strip() for f in raw.split("|")]
    if len(fields) != len(FIELD_NAMES):
        raise ParseError(
            f"line {line_no}: expected {len(FIELD_NAMES)} fields, got {len(fields)}"
        )
    rec = dict(zip(FIELD_NAMES, fields))
    if rec["item_type"] not in ITEM_TYPES:
        raise ParseError(
            f"line {line_no}, column item_type: expected one of {ITEM_TYPES}, got {rec['item_type']!r}"
        )
    if rec["timekeeper_role"] not in ROLES:
        raise ParseError(
            f"line {line_no}, column timekeeper_role: expected one of {ROLES}, got {rec['timekeeper_role']!r}"
        )
    if rec["task_code"] and not _CODE_RE.match(rec["task_code"]):
        raise ParseError(
            f"line {line_no}, column task_code: malformed code {rec['task_code']!r}"
        )
    return LineItem(
        line_id=rec["line_id"],
        invoice_id=rec["invoice_id"],
        case_id=rec["case_id"],
        service_date=_parse_date(rec["service_date"], line_no, "service_date"),
        item_type=rec["item_type"],
        task_code=rec["task_code"],
        activity_code=rec["activity_code"],
        expense_code=rec["expense_code"],
        timekeeper_id=rec["timekeeper_id"],
        timekeeper_role=rec["timekeeper_role"],
        hours=_parse_decimal(rec["hours"], line_no, "hours"),
        rate=_parse_decimal(rec["rate"], line_no, "rate"),
        total=_parse_decimal(rec["total"], line_no, "total"),
        description=rec["description"],
    )


def parse_invoice_file(path: str | Path) -> list[LineItem]:
    """Parse one pipe-delimited invoice file; the first line must be the header."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file, header missing")
    header = tuple(f.strip() for f in lines[0].split("|"))
    if header != FIELD_NAMES:
        raise ParseError(f"{path}: header does not name the {len(FIELD_NAMES)} fields in order")
    items = []
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        items.append(parse_invoice_line(raw, line_no))
    return items


def parse_case_manifest(path: str | Path) -> list[Case]:
    """Parse the case manifest (case_id|category|open_date)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file, header missing")
    header = tuple(f.strip() for f in lines[0].split("|"))
    if header != CASE_FIELD_NAMES:
        raise ParseError(f"{path}: header does not name the case fields in order")
    cases = []
    seen = set()
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = [f.strip() for f in raw.split("|")]
        if len(fields) != 3:
            raise ParseError(f"line {line_no}: expected 3 fields, got {len(fields)}")
        case_id, category, open_raw = fields
        if case_id in seen:
            raise ValidationError(f"duplicate case_id {case_id!r} in case manifest")
        seen.add(case_id)
        cases.append(Case(case_id, category, _parse_date(open_raw, line_no, "open_date")))
    return cases


def math_mismatch(item: LineItem) -> bool:
    if item.item_type != "FEE" or item.hours <= 0:
        return False
    return abs(item.hours * item.rate - item.total) > MONEY_TOLERANCE


def build_corpus(
    items: list[LineItem], cases: list[Case]
) -> tuple[Corpus, list[ValidationFlag]]:
    """Assemble a corpus, flagging math mismatches and rejecting out-of-order dates.

    Rejected items (service_date before the case open_date) are listed in the
    returned flags and excluded from the corpus; flagged items are kept.
    """
    by_id = {c.case_id: c for c in cases}
    seen_lines: set[str] = set()
    flags: list[ValidationFlag] = []
    for item in items:
        if item.line_id in seen_lines:
            raise ValidationError(f"duplicate line_id {item.line_id!r}")
        seen_lines.add(item.line_id)
        case = by_id.get(item.case_id)
        if case is None:
            raise ValidationError(
                f"line {item.line_id!r} references unknown case_id {item.case_id!r}"
            )
        if item.service_date < case.open_date:
            flags.append(
                ValidationFlag(
                    item.line_id,
                    FLAG_REJECTED_DATE,
                    f"service {item.service_date.isoformat()} before open {case.open_date.isoformat()}",
                )
            )
            continue
        if math_mismatch(item):
            flags.append(
                ValidationFlag(
                    item.line_id,
                    FLAG_MATH_MISMATCH,
                    f"hours*rate={item.hours * item.rate} vs total={item.total}",
                )
            )
        case.items.append(item)
    return Corpus(cases=cases), flags


def ingest_files(
    invoice_paths: list[str | Path], case_path: str | Path
) -> tuple[Corpus, list[ValidationFlag]]:
    """Parse invoice files plus the case manifest and assemble the corpus."""
    cases = parse_case_manifest(case_path)
    items: list[LineItem] = []
    manifest_files = []
    for p in invoice_paths:
        parsed = parse_invoice_file(p)
        items.extend(parsed)
        manifest_files.append({"path": str(p), "rows": len(parsed)})
    corpus, flags = build_corpus(items, cases)
    rejected = sum(1 for f in flags if f.flag == FLAG_REJECTED_DATE)
    corpus.ingest_manifest = {
        "files": manifest_files,
        "records_in": len(items),
        "items_accepted": corpus.total_items(),
        "items_rejected": rejected,
    }
    return corpus, flags


def days_since_open(item: LineItem, case: Case) -> int:
    """Whole days between the case open date and the item's service date."""
    delta = (item.service_date - case.open_date).days
    if delta < 0:
        raise ValidationError(
            f"line {item.line_id!r}: service_date precedes case open_date"
        )
    return delta


def items_to_pipe(items: list[LineItem]) -> str:
    lines = ["|".join(FIELD_NAMES)]
    lines.extend(item.to_pipe() for item in items)
    return "\n".join(lines) + "\n"


def cases_to_pipe(cases: list[Case]) -> str:
    lines = ["|".join(CASE_FIELD_NAMES)]
    lines.extend(f"{c.case_id}|{c.category}|{c.open_date.isoformat()}" for c in cases)
    return "\n".join(lines) + "\n"


def _item_to_dict(item: LineItem) -> dict:
    d = {name: getattr(item, name) for name in FIELD_NAMES}
    d["service_date"] = item.service_date.isoformat()
    for money in ("hours", "rate", "total"):
        d[money] = str(d[money])
    return d


def _item_from_dict(d: dict) -> LineItem:
    return LineItem(
        line_id=d["line_id"],
        invoice_id=d["invoice_id"],
        case_id=d["case_id"],
        service_date=date.fromisoformat(d["service_date"]),
        item_type=d["item_type"],
        task_code=d["task_code"],
        activity_code=d["activity_code"],
        expense_code=d["expense_code"],
        timekeeper_id=d["timekeeper_id"],
        timekeeper_role=d["timekeeper_role"],
        hours=Decimal(d["hours"]),
        rate=Decimal(d["rate"]),
        total=Decimal(d["total"]),
        description=d["description"],
    )


def corpus_to_json(corpus: Corpus) -> str:
    doc = {
        "cases": [
            {
                "case_id": c.case_id,
                "category": c.category,
                "open_date": c.open_date.isoformat(),
                "items": [_item_to_dict(i) for i in c.items],
            }
            for c in corpus.cases
        ],
        "ingest_manifest": corpus.ingest_manifest,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def corpus_from_json(text: str) -> Corpus:
    doc = json.loads(text)
    cases = [
        Case(
            case_id=c["case_id"],
            category=c["category"],
            open_date=date.fromisoformat(c["open_date"]),
            items=[_item_from_dict(i) for i in c["items"]],
        )
        for c in doc["cases"]
    ]
    return Corpus(cases=cases, ingest_manifest=doc.get("ingest_manifest", {}))


def flags_to_csv(flags: list[ValidationFlag]) -> str:
    lines = ["line_id,flag,detail"]
    for f in flags:
        detail = f.detail.replace('"', '""')
        lines.append(f'{f.line_id},{f.flag},"{detail}"')
    return "\n".join(lines) + "\n"
