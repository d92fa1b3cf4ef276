"""Serialization of ensembles, density estimates and samples.

Ensembles go to a columnar RFC-4180 CSV (17 significant digits, '.' decimal,
empty fields for censored values) plus a JSON sidecar echoing the full
ExperimentConfig; the pair round-trips losslessly.  Density estimates use
an `abscissa,value,stderr,kind` CSV with a JSON sidecar for provenance.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from stable_passage.config import ExperimentConfig
from stable_passage.estimators import DensityEstimate
from stable_passage.sampling import PassageEnsemble

__all__ = [
    "write_ensemble",
    "read_ensemble",
    "write_density",
    "read_density",
    "write_samples",
    "read_samples",
]


def _fmt(v: float) -> str:
    if np.isnan(v):
        return ""
    return format(float(v), ".17g")


def _parse(s: str) -> float:
    return float("nan") if s == "" else float(s)


def write_ensemble(ens: PassageEnsemble, base: str | Path) -> Path:
    """Write `<base>.csv` and `<base>.config.json`; returns the CSV path."""
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    cps = ens.config.checkpoints
    header = ["passage_time", "overshoot", "censored", "sup_horizon"] + [
        f"pos_at_{_fmt(t)}" for t in cps
    ]
    csv_path = base.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        censored = ens.censored_mask
        for i in range(len(ens)):
            row = [
                _fmt(ens.passage_time[i]),
                _fmt(ens.overshoot[i]),
                "true" if censored[i] else "false",
                _fmt(ens.sup_horizon[i]),
            ] + [_fmt(v) for v in ens.positions[i]]
            w.writerow(row)
    base.with_suffix(".config.json").write_text(ens.config.to_json() + "\n")
    return csv_path


def read_ensemble(base: str | Path) -> PassageEnsemble:
    base = Path(base)
    cfg = ExperimentConfig.load(base.with_suffix(".config.json"))
    with open(base.with_suffix(".csv"), newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        expected = ["passage_time", "overshoot", "censored", "sup_horizon"] + [
            f"pos_at_{_fmt(t)}" for t in cfg.checkpoints
        ]
        if header != expected:
            raise ValueError(f"ensemble CSV header mismatch: {header}")
        rows = list(r)
    n = len(rows)
    passage = np.empty(n)
    overshoot = np.empty(n)
    sup = np.empty(n)
    positions = np.empty((n, len(cfg.checkpoints)))
    for i, row in enumerate(rows):
        passage[i] = _parse(row[0])
        overshoot[i] = _parse(row[1])
        if row[2] not in ("true", "false"):
            raise ValueError(f"bad censored flag {row[2]!r} in row {i}")
        sup[i] = _parse(row[3])
        for j in range(len(cfg.checkpoints)):
            positions[i, j] = _parse(row[4 + j])
    return PassageEnsemble(cfg, passage, overshoot, sup, positions)


def write_density(est: DensityEstimate, base: str | Path) -> Path:
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["abscissa", "value", "stderr", "kind"])
        for a, v, s in zip(est.abscissae, est.values, est.stderr):
            w.writerow([_fmt(a), _fmt(v), _fmt(s), est.kind])
    meta = {"kind": est.kind, "provenance": est.provenance, "clamped": est.clamped}
    base.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path


def read_density(base: str | Path) -> DensityEstimate:
    base = Path(base)
    meta = json.loads(base.with_suffix(".json").read_text())
    with open(base.with_suffix(".csv"), newline="") as fh:
        r = csv.reader(fh)
        next(r)
        rows = list(r)
    a = np.array([_parse(row[0]) for row in rows])
    v = np.array([_parse(row[1]) for row in rows])
    s = np.array([_parse(row[2]) for row in rows])
    return DensityEstimate(
        a, v, s, kind=meta["kind"], provenance=meta["provenance"],
        clamped=meta["clamped"],
    )


def write_samples(samples: np.ndarray, path: str | Path, meta: dict | None = None):
    """One-column CSV of samples with an optional JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value"])
        for v in samples:
            w.writerow([_fmt(v)])
    if meta is not None:
        path.with_suffix(".json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n"
        )


def read_samples(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        return np.array([_parse(row[0]) for row in r])
