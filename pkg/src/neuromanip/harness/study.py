"""Block-transfer study analytics: completion time, fatigue index, NASA-TLX.

All arithmetic is exact sample statistics (n-1 standard deviations, no
tolerances). Published per-condition aggregates ship as a versioned CSV;
per-participant raw data is intentionally not fabricated, so feeding that
table through `study-stats` passes it through validated and unchanged.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..errors import EmptyInput, MissingTrial

MASS_CONDITIONS_G = (100, 200, 300)
TLX_SUBSCALES = ("mental", "physical", "temporal", "performance", "effort",
                 "frustration")


@dataclass(frozen=True)
class TrialRecord:
    participant: str
    mass_g: int
    trial: int
    completion_s: float

    def __post_init__(self):
        if self.mass_g not in MASS_CONDITIONS_G:
            raise ValueError(f"mass {self.mass_g} g not one of {MASS_CONDITIONS_G}")
        if self.trial not in (1, 2, 3):
            raise ValueError("trial must be 1..3")
        if self.completion_s <= 0:
            raise ValueError("completion time must be positive")


@dataclass(frozen=True)
class TlxRecord:
    participant: str
    mass_g: int
    scores: tuple[int, ...]   # mental, physical, temporal, performance, effort, frustration

    def __post_init__(self):
        if self.mass_g not in MASS_CONDITIONS_G:
            raise ValueError(f"mass {self.mass_g} g not one of {MASS_CONDITIONS_G}")
        if len(self.scores) != len(TLX_SUBSCALES):
            raise ValueError(f"need {len(TLX_SUBSCALES)} subscale scores")
        if any(not (1 <= s <= 20) for s in self.scores):
            raise ValueError("subscale scores must lie in 1..20")


def fatigue_index(trials: Sequence[TrialRecord]) -> float:
    """Completion-time change from first to third trial of one condition."""
    by_trial = {t.trial: t for t in trials}
    if sorted(by_trial) != [1, 2, 3] or len(trials) != 3:
        raise MissingTrial(f"need exactly trials 1..3, got {sorted(t.trial for t in trials)}")
    participants = {t.participant for t in trials}
    masses = {t.mass_g for t in trials}
    if len(participants) != 1 or len(masses) != 1:
        raise MissingTrial("trials must share one participant and one mass condition")
    return by_trial[3].completion_s - by_trial[1].completion_s


@dataclass(frozen=True)
class AggregateRow:
    metric: str
    mass_g: int
    mean: float
    sd: Optional[float]      # absent for single observations
    n: int


def _mean_sd(values: list[float]) -> tuple[float, Optional[float]]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def study_aggregate(trial_records: Sequence[TrialRecord] = (),
                    tlx_records: Sequence[TlxRecord] = ()) -> list[AggregateRow]:
    """Per-condition means and n-1 standard deviations.

    Emits completion_s and fatigue_index rows from trial records (fatigue is
    computed per participant first) and one row per TLX subscale.
    """
    if not trial_records and not tlx_records:
        raise EmptyInput("no study records given")
    rows: list[AggregateRow] = []

    if trial_records:
        for mass in MASS_CONDITIONS_G:
            times = [t.completion_s for t in trial_records if t.mass_g == mass]
            if times:
                mean, sd = _mean_sd(times)
                rows.append(AggregateRow("completion_s", mass, mean, sd, len(times)))
        for mass in MASS_CONDITIONS_G:
            indices = []
            participants = sorted({t.participant for t in trial_records
                                   if t.mass_g == mass})
            for p in participants:
                trials = [t for t in trial_records
                          if t.participant == p and t.mass_g == mass]
                if sorted(t.trial for t in trials) == [1, 2, 3]:
                    indices.append(fatigue_index(trials))
            if indices:
                mean, sd = _mean_sd(indices)
                rows.append(AggregateRow("fatigue_index", mass, mean, sd, len(indices)))

    if tlx_records:
        for i, subscale in enumerate(TLX_SUBSCALES):
            for mass in MASS_CONDITIONS_G:
                scores = [float(r.scores[i]) for r in tlx_records if r.mass_g == mass]
                if scores:
                    mean, sd = _mean_sd(scores)
                    rows.append(AggregateRow(f"tlx_{subscale}", mass, mean, sd,
                                             len(scores)))
    return rows


# --- CSV schemas -------------------------------------------------------------------

TRIAL_HEADER = ["participant", "mass_g", "trial", "completion_s"]
TLX_HEADER = ["participant", "mass_g", *TLX_SUBSCALES]
AGGREGATE_HEADER = ["version", "metric", "mass_g", "mean", "sd"]


def read_trial_csv(path: str | Path) -> list[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        records = [TrialRecord(r["participant"], int(r["mass_g"]), int(r["trial"]),
                               float(r["completion_s"])) for r in reader]
    seen = set()
    for r in records:
        key = (r.participant, r.mass_g, r.trial)
        if key in seen:
            raise ValueError(f"duplicate trial record {key}")
        seen.add(key)
    return records


def read_tlx_csv(path: str | Path) -> list[TlxRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [TlxRecord(r["participant"], int(r["mass_g"]),
                          tuple(int(r[s]) for s in TLX_SUBSCALES)) for r in reader]


def read_aggregate_csv(path: str | Path) -> list[AggregateRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != AGGREGATE_HEADER:
            raise ValueError(f"unexpected aggregate header {reader.fieldnames}")
        for r in reader:
            if r["version"] != "v1":
                raise ValueError(f"unsupported reference table version {r['version']}")
            sd = float(r["sd"]) if r["sd"] not in ("", None) else None
            rows.append(AggregateRow(r["metric"], int(r["mass_g"]),
                                     float(r["mean"]), sd, 1))
    if not rows:
        raise EmptyInput(f"no aggregate rows in {path}")
    return rows


def sniff_study_csv(path: str | Path) -> str:
    """Classify a study CSV: 'trial', 'tlx', or 'aggregate'."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    if header == TRIAL_HEADER:
        return "trial"
    if header == TLX_HEADER:
        return "tlx"
    if header == AGGREGATE_HEADER:
        return "aggregate"
    raise ValueError(f"unrecognized study CSV header {header}")


def format_table(rows: Sequence[AggregateRow]) -> str:
    lines = ["metric,mass_g,mean,sd,n"]
    for r in rows:
        sd = "" if r.sd is None else repr(r.sd)
        lines.append(f"{r.metric},{r.mass_g},{r.mean!r},{sd},{r.n}")
    return "\n".join(lines)
