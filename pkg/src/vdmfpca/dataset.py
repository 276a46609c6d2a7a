"""Per-subject functional data with individual domain lengths.

The interchange format is a long CSV with header
``subject_id,variable,time,value``; a subject's domain length defaults to its
last observed time.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass
class SubjectRecord:
    """One subject's series for every variable, observed on ``[0, domain_length]``."""

    subject_id: str
    domain_length: float
    series: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.domain_length) or self.domain_length <= 0:
            raise DataError(f"subject {self.subject_id}: domain length must be positive")
        for var, (times, values) in self.series.items():
            times = np.asarray(times, dtype=np.float64)
            values = np.asarray(values, dtype=np.float64)
            if times.shape != values.shape or times.ndim != 1:
                raise DataError(f"subject {self.subject_id}, {var}: times/values shape mismatch")
            if times.size < 2:
                raise DataError(f"subject {self.subject_id}, {var}: needs at least 2 observations")
            if np.any(np.diff(times) <= 0):
                raise DataError(f"subject {self.subject_id}, {var}: times must be strictly increasing")
            if times[0] < 0 or times[-1] > self.domain_length + 1e-9:
                raise DataError(f"subject {self.subject_id}, {var}: times outside [0, domain_length]")
            if not np.all(np.isfinite(values)):
                raise DataError(f"subject {self.subject_id}, {var}: non-finite value")
            self.series[var] = (times, values)


@dataclass
class FunctionalDataset:
    subjects: list
    variables: list

    def __post_init__(self):
        seen = set()
        for rec in self.subjects:
            if rec.subject_id in seen:
                raise DataError(f"duplicate subject_id {rec.subject_id}")
            seen.add(rec.subject_id)
            for var in self.variables:
                if var not in rec.series:
                    raise DataError(f"subject {rec.subject_id}: missing variable {var}")

    def __len__(self) -> int:
        return len(self.subjects)

    def domain_lengths(self) -> np.ndarray:
        return np.array([rec.domain_length for rec in self.subjects])

    def subject_ids(self) -> list:
        return [rec.subject_id for rec in self.subjects]


def write_long_csv(dataset: FunctionalDataset, path) -> None:
    """Write the long-format CSV (one row per observation)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "variable", "time", "value"])
        for rec in dataset.subjects:
            for var in dataset.variables:
                times, values = rec.series[var]
                for t, v in zip(times, values):
                    writer.writerow([rec.subject_id, var, _fmt(t), _fmt(v)])


def _fmt(x: float) -> str:
    f = float(x)
    return str(int(f)) if f.is_integer() else repr(f)


def read_long_csv(path, min_obs: int = 0):
    """Parse the long-format CSV into a dataset.

    Subjects with fewer than ``min_obs`` observations for any variable are
    dropped.  Returns ``(dataset, n_excluded)``.  Domain length is the last
    observed time across variables.
    """
    per_subject: dict = {}
    order: list = []
    variables: list = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:4]] != ["subject_id", "variable", "time", "value"]:
            raise DataError(f"{path}: expected header subject_id,variable,time,value")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            sid, var = row[0], row[1]
            try:
                t, v = float(row[2]), float(row[3])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if sid not in per_subject:
                per_subject[sid] = {}
                order.append(sid)
            if var not in variables:
                variables.append(var)
            per_subject[sid].setdefault(var, []).append((t, v))

    subjects = []
    excluded = 0
    for sid in order:
        series = {}
        ok = True
        max_t = 0.0
        for var in variables:
            obs = per_subject[sid].get(var, [])
            if len(obs) < max(2, min_obs):
                ok = False
                break
            obs.sort(key=lambda pair: pair[0])
            times = np.array([p[0] for p in obs])
            values = np.array([p[1] for p in obs])
            series[var] = (times, values)
            max_t = max(max_t, float(times[-1]))
        if not ok:
            excluded += 1
            continue
        subjects.append(SubjectRecord(subject_id=sid, domain_length=max_t, series=series))
    if not subjects:
        raise DataError(f"{path}: no usable subjects")
    return FunctionalDataset(subjects=subjects, variables=variables), excluded
