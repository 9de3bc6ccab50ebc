"""Rare-combination stats and lifecycle-anomaly injection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from datetime import date, timedelta

import numpy as np

from .features import FeatureRow

COMBO_FIELDS = ("category", "item_type", "task_code", "activity_code", "timekeeper_role")

ComboKey = tuple[str, str, str, str, str]


class SynthError(ValueError):
    pass


@dataclass
class ComboStat:
    count: int
    min_days: int
    mean_days: float


@dataclass
class LifecycleStats:
    combos: dict[ComboKey, ComboStat]

    def __getitem__(self, key: ComboKey) -> ComboStat:
        return self.combos[key]


def combo_key(row: FeatureRow) -> ComboKey:
    return (row.category, row.item_type, row.task_code, row.activity_code, row.timekeeper_role)


def combo_counts(rows: list[FeatureRow]) -> LifecycleStats:
    """Exact count plus min/mean days-since-open per combination."""
    counts: dict[ComboKey, int] = {}
    mins: dict[ComboKey, int] = {}
    sums: dict[ComboKey, int] = {}
    for row in rows:
        key = combo_key(row)
        counts[key] = counts.get(key, 0) + 1
        sums[key] = sums.get(key, 0) + row.days_since_open
        prev = mins.get(key)
        if prev is None or row.days_since_open < prev:
            mins[key] = row.days_since_open
    combos = {
        key: ComboStat(counts[key], mins[key], sums[key] / counts[key])
        for key in sorted(counts)
    }
    return LifecycleStats(combos)


def flag_global_anomalies(stats: LifecycleStats, threshold: int) -> set[ComboKey]:
    """Combinations occurring strictly fewer times than the threshold."""
    return {key for key, stat in stats.combos.items() if stat.count < threshold}


def injected_days(u: float, beta: float, min_days: int) -> int:
    """New day offset for an injected row: round(u * beta * min_days), floored at 0."""
    return max(0, int(round(u * beta * min_days)))


@dataclass
class LabeledDataset:
    rows: list[FeatureRow]
    labels: np.ndarray  # 1 = injected anomaly
    provenance: list[str]  # source line_id for injected rows, "" otherwise

    def injected_count(self) -> int:
        return int(self.labels.sum())


def inject_anomalies(
    rows: list[FeatureRow],
    stats: LifecycleStats,
    global_anomalies: set[ComboKey],
    target_fraction: float = 0.05,
    min_days_floor: int = 60,
    beta: float = 0.25,
    seed: int = 0,
) -> LabeledDataset:
    """Append synthetic rows that are normal in every field except case timing.

    Source rows are drawn uniformly from combinations that are not global
    anomalies and never legitimately occur before `min_days_floor`; each copy
    is moved to a day strictly earlier than its combination has ever been seen.
    """
    if not 0.0 < target_fraction < 0.5:
        raise SynthError("target_fraction must lie in (0, 0.5)")
    eligible = [
        i
        for i, row in enumerate(rows)
        if combo_key(row) not in global_anomalies
        and stats[combo_key(row)].min_days >= min_days_floor
    ]
    if not eligible:
        raise SynthError(
            f"no combination is eligible for injection "
            f"(min_days_floor={min_days_floor}, {len(global_anomalies)} global combos)"
        )
    rng = np.random.default_rng(seed)
    n_normal = len(rows)
    needed = math.ceil(target_fraction * n_normal / (1.0 - target_fraction))
    max_draws = 10 * max(1, needed)

    injected: list[FeatureRow] = []
    provenance: list[str] = []
    draws = 0
    while len(injected) / (len(injected) + n_normal) < target_fraction:
        if draws >= max_draws:
            raise SynthError(
                f"target fraction {target_fraction} unreachable within {max_draws} draws"
            )
        draws += 1
        source = rows[eligible[rng.integers(len(eligible))]]
        combo_min = stats[combo_key(source)].min_days
        new_days = injected_days(float(rng.uniform()), beta, combo_min)
        sequence = len(injected) + 1
        injected.append(
            replace(
                source,
                line_id=f"SYN{sequence:06d}",
                days_since_open=new_days,
                log_days_since_open=math.log1p(new_days),
                service_date=source.case_open_date + timedelta(days=new_days),
            )
        )
        provenance.append(source.line_id)

    labels = np.concatenate([np.zeros(n_normal, dtype=np.int8), np.ones(len(injected), dtype=np.int8)])
    return LabeledDataset(
        rows=list(rows) + injected,
        labels=labels,
        provenance=[""] * n_normal + provenance,
    )


_CSV_HEADER = (
    "line_id,case_id,category,unique_code_count,task_code,activity_code,"
    "item_type,billing_mode,days_since_open,log_days_since_open,"
    "service_date,case_open_date,label,source_line_id"
)


def dataset_to_csv(dataset: LabeledDataset) -> str:
    lines = [_CSV_HEADER]
    for row, label, source in zip(dataset.rows, dataset.labels, dataset.provenance):
        lines.append(
            ",".join(
                (
                    row.line_id,
                    row.case_id,
                    row.category,
                    str(row.unique_code_count),
                    row.task_code,
                    row.activity_code,
                    row.item_type,
                    str(row.billing_mode),
                    str(row.days_since_open),
                    repr(row.log_days_since_open),
                    row.service_date.isoformat(),
                    row.case_open_date.isoformat(),
                    str(int(label)),
                    source,
                )
            )
        )
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str) -> LabeledDataset:
    lines = text.splitlines()
    if not lines or lines[0] != _CSV_HEADER:
        raise SynthError("unrecognized labeled-dataset header")
    rows: list[FeatureRow] = []
    labels: list[int] = []
    provenance: list[str] = []
    for raw in lines[1:]:
        if not raw:
            continue
        parts = raw.split(",")
        if len(parts) != 14:
            raise SynthError(f"bad labeled-dataset row: {raw!r}")
        rows.append(
            FeatureRow(
                line_id=parts[0],
                case_id=parts[1],
                category=parts[2],
                unique_code_count=int(parts[3]),
                task_code=parts[4],
                activity_code=parts[5],
                item_type=parts[6],
                billing_mode=int(parts[7]),
                days_since_open=int(parts[8]),
                log_days_since_open=float(parts[9]),
                service_date=date.fromisoformat(parts[10]),
                case_open_date=date.fromisoformat(parts[11]),
            )
        )
        labels.append(int(parts[12]))
        provenance.append(parts[13])
    return LabeledDataset(rows, np.asarray(labels, dtype=np.int8), provenance)


def dataset_manifest(
    dataset: LabeledDataset,
    seed: int,
    threshold: int,
    target_fraction: float,
    beta: float,
    min_days_floor: int,
    global_combo_count: int,
) -> str:
    injected = dataset.injected_count()
    total = len(dataset.rows)
    return json.dumps(
        {
            "seed": seed,
            "threshold": threshold,
            "target_fraction": target_fraction,
            "beta": beta,
            "min_days_floor": min_days_floor,
            "global_combos": global_combo_count,
            "rows_total": total,
            "rows_injected": injected,
            "rows_normal": total - injected,
            "realized_fraction": injected / total if total else 0.0,
        },
        indent=2,
        sort_keys=True,
    )
