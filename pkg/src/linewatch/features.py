"""Case- and line-item-level features: phase mix, code counts, encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .gmm import BillingModeModel, billing_mode
from .ingest import Case, Corpus, days_since_open

PHASE_BUCKETS = ("L100", "L200", "L300", "L400", "L500", "E100", "E200", "OTHER")
L_PHASES = ("L100", "L200", "L300", "L400", "L500")

CATEGORICAL_FEATURES = ("category", "task_code", "activity_code", "item_type", "billing_mode")
NUMERIC_FEATURES = ("unique_code_count", "log_days_since_open")


class FeatureError(ValueError):
    pass


def phase_bucket(item_type: str, task_code: str, expense_code: str) -> str:
    """Bucket a line-item by code prefix (letter plus hundreds digit)."""
    code = task_code if item_type == "FEE" else expense_code
    if len(code) == 4 and code[1:].isdigit():
        candidate = f"{code[0].upper()}{code[1]}00"
        if candidate in PHASE_BUCKETS:
            return candidate
    return "OTHER"


@dataclass
class PhaseDistribution:
    case_id: str
    fractions: np.ndarray  # aligned with PHASE_BUCKETS

    def fraction(self, bucket: str) -> float:
        return float(self.fractions[PHASE_BUCKETS.index(bucket)])


def phase_distribution(case: Case) -> PhaseDistribution:
    """Fraction of the case's billed total falling in each phase bucket."""
    totals = np.zeros(len(PHASE_BUCKETS))
    for item in case.items:
        bucket = phase_bucket(item.item_type, item.task_code, item.expense_code)
        totals[PHASE_BUCKETS.index(bucket)] += float(item.total)
    grand = totals.sum()
    if grand <= 0:
        raise FeatureError(f"case {case.case_id!r}: zero billed total, distribution undefined")
    return PhaseDistribution(case.case_id, totals / grand)


def unique_code_count(case: Case) -> int:
    return len({i.task_code for i in case.items if i.task_code})


def l_phase_buckets_used(case: Case) -> set[str]:
    used = set()
    for item in case.items:
        if item.item_type != "FEE":
            continue
        bucket = phase_bucket(item.item_type, item.task_code, item.expense_code)
        if bucket in L_PHASES:
            used.add(bucket)
    return used


def l_phase_utilization(case: Case) -> float:
    """Distinct L-phase buckets used over the number of defined L phases."""
    return len(l_phase_buckets_used(case)) / len(L_PHASES)


def charge_point(rate: float, total: float) -> tuple[float, float]:
    """GMM input coordinates: log-damped rate and total."""
    return (math.log1p(rate), math.log1p(total))


@dataclass
class FeatureRow:
    line_id: str
    case_id: str
    category: str
    unique_code_count: int
    task_code: str
    activity_code: str
    item_type: str
    billing_mode: int
    days_since_open: int
    log_days_since_open: float
    service_date: date
    case_open_date: date


def build_feature_rows(cases: list[Case], mode_model: BillingModeModel) -> list[FeatureRow]:
    """Featurize every line-item of the given cases."""
    rows: list[FeatureRow] = []
    for case in cases:
        code_count = unique_code_count(case)
        for item in case.items:
            days = days_since_open(item, case)
            point = charge_point(float(item.rate), float(item.total))
            rows.append(
                FeatureRow(
                    line_id=item.line_id,
                    case_id=case.case_id,
                    category=case.category,
                    unique_code_count=code_count,
                    task_code=item.task_code,
                    activity_code=item.activity_code,
                    item_type=item.item_type,
                    billing_mode=int(billing_mode(mode_model, np.asarray(point))),
                    days_since_open=days,
                    log_days_since_open=math.log1p(days),
                    service_date=item.service_date,
                    case_open_date=case.open_date,
                )
            )
    return rows


def gmm_points(cases: list[Case]) -> np.ndarray:
    pts = [charge_point(float(i.rate), float(i.total)) for c in cases for i in c.items]
    return np.asarray(pts, dtype=float)


@dataclass
class EncodedMatrix:
    row_ids: list[str]
    X: np.ndarray
    columns: dict[str, int]  # column name -> index
    groups: dict[str, list[int]]  # feature name -> column indices
    numeric_cols: list[int]
    vocab: dict[str, list]


def build_vocab(rows: list[FeatureRow]) -> dict[str, list]:
    """Sorted categorical vocabularies, frozen for later encoding."""
    vocab: dict[str, list] = {}
    for feat in CATEGORICAL_FEATURES:
        vocab[feat] = sorted({getattr(r, feat) for r in rows})
    return vocab


def encode(rows: list[FeatureRow], vocab: dict[str, list] | None = None) -> EncodedMatrix:
    """One-hot categoricals (unseen values encode all-zero) plus numeric columns."""
    if not rows:
        raise FeatureError("cannot encode an empty row list")
    if vocab is None:
        vocab = build_vocab(rows)
    columns: dict[str, int] = {}
    groups: dict[str, list[int]] = {}
    for feat in CATEGORICAL_FEATURES:
        groups[feat] = []
        for value in vocab[feat]:
            idx = len(columns)
            columns[f"{feat}={value}"] = idx
            groups[feat].append(idx)
    numeric_cols = []
    for feat in NUMERIC_FEATURES:
        idx = len(columns)
        columns[feat] = idx
        groups[feat] = [idx]
        numeric_cols.append(idx)

    X = np.zeros((len(rows), len(columns)))
    lookup = {
        feat: {value: groups[feat][j] for j, value in enumerate(vocab[feat])}
        for feat in CATEGORICAL_FEATURES
    }
    for i, row in enumerate(rows):
        for feat in CATEGORICAL_FEATURES:
            col = lookup[feat].get(getattr(row, feat))
            if col is not None:
                X[i, col] = 1.0
        X[i, columns["unique_code_count"]] = row.unique_code_count
        X[i, columns["log_days_since_open"]] = row.log_days_since_open
    return EncodedMatrix(
        row_ids=[r.line_id for r in rows],
        X=X,
        columns=columns,
        groups=groups,
        numeric_cols=numeric_cols,
        vocab=vocab,
    )


def matrix_to_csv(encoded: EncodedMatrix) -> str:
    names = sorted(encoded.columns, key=encoded.columns.get)
    lines = ["row_id," + ",".join(names)]
    for rid, row in zip(encoded.row_ids, encoded.X):
        lines.append(rid + "," + ",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"
