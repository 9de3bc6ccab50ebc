"""Seeded synthetic invoice corpus for desk-scale experiments.

Cases advance through the L100-L500 phases over non-overlapping date windows,
with role-priced hourly work, expenses, a flat-fee minority, and a sparse
early-settled minority.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from decimal import Decimal
from pathlib import Path

import numpy as np

from .ingest import Case, Corpus, LineItem

PHASE_TASKS = {
    0: ("L110", "L120", "L130", "L140", "L160"),
    1: ("L210", "L220", "L230", "L240", "L250"),
    2: ("L310", "L320", "L330", "L340", "L350"),
    3: ("L410", "L420", "L430", "L440", "L450"),
    4: ("L510", "L520", "L530"),
}
ACTIVITIES = ("A101", "A102", "A103", "A104", "A105", "A106", "A107", "A108")
EXPENSE_CODES = ("E101", "E102", "E105", "E106", "E107", "E108", "E109", "E110", "E111", "E201")
ROLE_RATE_RANGES = {
    "PARTNER": (600, 950),
    "ASSOCIATE": (300, 550),
    "PARALEGAL": (120, 240),
    "OTHER": (80, 160),
}
# Item-count mix across phases; distinct profiles give the embedding structure.
PHASE_MIX_PROFILES = (
    (0.30, 0.28, 0.20, 0.14, 0.08),
    (0.12, 0.38, 0.28, 0.14, 0.08),
    (0.15, 0.20, 0.22, 0.30, 0.13),
)
DESCRIPTIONS = {
    0: ("Initial case assessment", "Fact investigation", "Review client documents", "Develop case strategy"),
    1: ("Draft motion", "Review pleadings", "Prepare answer", "Court conference call"),
    2: ("Document production review", "Deposition preparation", "Attend deposition", "Written discovery"),
    3: ("Expert witness preparation", "Trial exhibit preparation", "Pretrial motions", "Witness outline"),
    4: ("Appellate brief research", "Draft appeal brief", "Oral argument preparation"),
}
EXPENSE_DESCRIPTIONS = ("Copies", "Travel", "Court fees", "Delivery service", "Online research")


@dataclass
class CorpusSpec:
    n_cases: int = 340
    items_per_case: tuple[int, int] = (120, 260)
    seed: int = 7
    start: date = date(2018, 1, 1)
    open_span_days: int = 900
    flat_fee_fraction: float = 0.10
    sparse_fraction: float = 0.08
    expense_fraction: float = 0.15
    other_category_fraction: float = 0.02
    math_error_rate: float = 0.002


def _validate(spec: CorpusSpec) -> None:
    lo, hi = spec.items_per_case
    if spec.n_cases < 0 or lo < 1 or hi < lo:
        raise ValueError(f"invalid corpus spec: n_cases={spec.n_cases}, items_per_case={spec.items_per_case}")
    for name in ("flat_fee_fraction", "sparse_fraction", "expense_fraction", "other_category_fraction", "math_error_rate"):
        value = getattr(spec, name)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"invalid corpus spec: {name}={value}")


def _phase_starts(rng: np.random.Generator) -> list[int]:
    starts = [0]
    starts.append(int(rng.integers(90, 141)))
    starts.append(starts[-1] + int(rng.integers(60, 141)))
    starts.append(starts[-1] + int(rng.integers(60, 141)))
    starts.append(starts[-1] + int(rng.integers(50, 121)))
    starts.append(starts[-1] + int(rng.integers(60, 151)))  # case end sentinel
    return starts


def _team(rng: np.random.Generator, case_idx: int):
    team = []
    for k, role in enumerate(("PARTNER", "ASSOCIATE", "ASSOCIATE", "PARALEGAL", "OTHER")):
        lo, hi = ROLE_RATE_RANGES[role]
        team.append((f"TK{case_idx:04d}{k}", role, int(rng.integers(lo, hi + 1))))
    return team


def gen_corpus(spec: CorpusSpec) -> Corpus:
    _validate(spec)
    rng = np.random.default_rng(spec.seed)
    cases: list[Case] = []
    line_seq = 0
    for ci in range(spec.n_cases):
        case_id = f"CASE{ci:04d}"
        open_date = spec.start + timedelta(days=int(rng.integers(spec.open_span_days)))
        category = "Litigation"
        if rng.uniform() < spec.other_category_fraction:
            category = "Employment"
        sparse = rng.uniform() < spec.sparse_fraction
        flat_fee = (not sparse) and rng.uniform() < spec.flat_fee_fraction
        starts = _phase_starts(rng)
        profile = PHASE_MIX_PROFILES[int(rng.integers(len(PHASE_MIX_PROFILES)))]
        team = _team(rng, ci)

        if sparse:
            n_items = int(rng.integers(3, 16))
            active_phases = [0, 1]
        else:
            lo, hi = spec.items_per_case
            n_items = int(rng.integers(lo, hi + 1))
            active_phases = [0, 1, 2, 3, 4]
            if rng.uniform() < 0.25:
                active_phases = active_phases[:4]

        weights = np.array([profile[p] for p in active_phases])
        weights = weights / weights.sum()
        case = Case(case_id, category, open_date)
        records = []
        for _ in range(n_items):
            is_expense = rng.uniform() < spec.expense_fraction
            if is_expense:
                day = int(rng.integers(0, starts[-1]))
                code = EXPENSE_CODES[int(rng.integers(len(EXPENSE_CODES)))]
                tk_id, role, _ = team[int(rng.integers(len(team)))]
                total = Decimal(f"{rng.uniform(5.0, 400.0):.2f}")
                records.append(
                    (day, "EXPENSE", "", "", code, tk_id, role, Decimal("0"), Decimal("0"), total,
                     EXPENSE_DESCRIPTIONS[int(rng.integers(len(EXPENSE_DESCRIPTIONS)))])
                )
                continue
            phase = int(active_phases[rng.choice(len(active_phases), p=weights)])
            day = int(rng.integers(starts[phase], starts[phase + 1]))
            task = PHASE_TASKS[phase][int(rng.integers(len(PHASE_TASKS[phase])))]
            activity = ACTIVITIES[int(rng.integers(len(ACTIVITIES)))]
            tk_id, role, rate = team[int(rng.integers(len(team)))]
            desc = DESCRIPTIONS[phase][int(rng.integers(len(DESCRIPTIONS[phase])))]
            if flat_fee:
                hours, rate_d = Decimal("0"), Decimal("0")
                total = Decimal(f"{rng.uniform(800.0, 6000.0):.2f}")
            else:
                hours = Decimal(int(rng.integers(2, 81))).scaleb(-1)  # 0.2 .. 8.0
                rate_d = Decimal(rate)
                total = (hours * rate_d).quantize(Decimal("0.01"))
                if rng.uniform() < spec.math_error_rate:
                    total += Decimal(f"{rng.uniform(0.5, 40.0):.2f}")
            records.append((day, "FEE", task, activity, "", tk_id, role, hours, rate_d, total, desc))

        records.sort(key=lambda r: r[0])
        for day, item_type, task, activity, expense, tk_id, role, hours, rate_d, total, desc in records:
            line_seq += 1
            service = open_date + timedelta(days=day)
            case.items.append(
                LineItem(
                    line_id=f"LN{line_seq:07d}",
                    invoice_id=f"INV-{case_id}-{service.strftime('%Y%m')}",
                    case_id=case_id,
                    service_date=service,
                    item_type=item_type,
                    task_code=task,
                    activity_code=activity,
                    expense_code=expense,
                    timekeeper_id=tk_id,
                    timekeeper_role=role,
                    hours=hours,
                    rate=rate_d,
                    total=total,
                    description=desc,
                )
            )
        cases.append(case)
    corpus = Corpus(cases=cases)
    corpus.ingest_manifest = {"generator_seed": spec.seed, "n_cases": spec.n_cases}
    return corpus


def write_corpus_files(corpus: Corpus, directory: str | Path) -> tuple[Path, Path]:
    """Emit the corpus in the ingestion format (invoices + case manifest)."""
    from .ingest import cases_to_pipe, items_to_pipe

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    invoices = directory / "invoices.txt"
    cases = directory / "cases.txt"
    invoices.write_text(items_to_pipe([i for c in corpus.cases for i in c.items]), encoding="utf-8")
    cases.write_text(cases_to_pipe(corpus.cases), encoding="utf-8")
    return invoices, cases
