"""Decay-curve container and its CSV representation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_1d

__all__ = ["DecayCurve", "format_float", "write_table_csv"]

CSV_COLUMNS = ("t_spin_s", "eta", "sigma_eta")


def format_float(x) -> str:
    """17 significant digits: round-trips any float64 exactly."""
    return format(float(x), ".17g")


@dataclass
class DecayCurve:
    """Efficiency samples versus spin storage time.

    ``sigma_eta`` may be ``None`` for curves without error estimates; fits
    then run unweighted and say so.
    """

    t_spin: np.ndarray
    eta: np.ndarray
    sigma_eta: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_spin = check_1d(self.t_spin, "t_spin", nonnegative=True)
        self.eta = check_1d(self.eta, "eta", nonnegative=True)
        if self.eta.shape != self.t_spin.shape:
            raise ValueError("t_spin and eta must have equal length")
        if np.any(np.diff(self.t_spin) <= 0):
            raise ValueError("t_spin must be strictly increasing")
        if self.sigma_eta is not None:
            self.sigma_eta = check_1d(self.sigma_eta, "sigma_eta", positive=True)
            if self.sigma_eta.shape != self.t_spin.shape:
                raise ValueError("sigma_eta must match t_spin in length")

    def __len__(self):
        return self.t_spin.shape[0]

    @property
    def points(self):
        sig = self.sigma_eta if self.sigma_eta is not None else [None] * len(self)
        return list(zip(self.t_spin.tolist(), self.eta.tolist(), list(sig)))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}: {json.dumps(self.meta[key], sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        sig = self.sigma_eta if self.sigma_eta is not None else np.full(len(self), np.nan)
        for t, e, s in zip(self.t_spin, self.eta, sig):
            writer.writerow([format_float(t), format_float(e),
                             "" if np.isnan(s) else format_float(s)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "DecayCurve":
        """Parse a curve from a path or CSV text.

        Comment lines start with ``#``; ``# key: <json>`` lines become meta.
        The ``sigma_eta`` column is optional.
        """
        text = Path(source).read_text() if _is_path(source) else str(source)
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    try:
                        meta[key.strip()] = json.loads(value)
                    except json.JSONDecodeError:
                        meta[key.strip()] = value.strip()
            elif line.strip():
                rows.append(line)
        reader = csv.DictReader(rows)
        if reader.fieldnames is None or not {"t_spin_s", "eta"} <= set(reader.fieldnames):
            raise ValueError("CSV needs at least the columns t_spin_s, eta")
        t, e, s = [], [], []
        for r in reader:
            t.append(float(r["t_spin_s"]))
            e.append(float(r["eta"]))
            s.append(r.get("sigma_eta") or "")
        sigma = None
        if any(s):
            if not all(s):
                raise ValueError("sigma_eta must be given for all rows or none")
            sigma = [float(v) for v in s]
        return cls(np.array(t), np.array(e), None if sigma is None else np.array(sigma), meta)


def _is_path(source) -> bool:
    if isinstance(source, Path):
        return True
    return isinstance(source, str) and "\n" not in source and Path(source).exists()


def write_table_csv(path, columns, rows, comments=()):
    """Write a plot-ready table: ``#`` comments, one header row, float rows."""
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else format_float(v) for v in row])
    Path(path).write_text(buf.getvalue())
    return buf.getvalue()
