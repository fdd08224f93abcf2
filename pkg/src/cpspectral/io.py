"""CSV formats.

Samples file (``index,re,im``, 1-based indices) starts with ``#`` comment
lines carrying ``n_total`` and, for noisy data, ``noise_sigma``. The ground
truth sidecar sits next to it as ``<stem>.truth.csv`` with rows
``omega,amp_re,amp_im`` and the same comment header.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .signal_model import SampleSet, SpectralModel


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def parse_complex(text: str) -> complex:
    return complex(text.strip())


def truth_path(samples_path) -> Path:
    path = Path(samples_path)
    return path.with_name(path.stem + ".truth.csv")


def _header(n_total: int, noise_sigma: Optional[float]) -> List[str]:
    lines = [f"# n_total={n_total}"]
    if noise_sigma is not None:
        lines.append(f"# noise_sigma={noise_sigma!r}")
    return lines


def _read_commented(path) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    meta = {}
    body = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
    return meta, list(csv.DictReader(body))


def write_samples(path, samples: SampleSet, truth: Optional[SpectralModel] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _header(samples.n_total, samples.noise_sigma):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im"])
        for n, v in zip(samples.indices, samples.values):
            writer.writerow([int(n), repr(float(v.real)), repr(float(v.imag))])
    if truth is not None:
        write_model(truth_path(path), truth, samples.n_total, samples.noise_sigma)


def read_samples(path, n_total: Optional[int] = None) -> SampleSet:
    meta, rows = _read_commented(path)
    if n_total is None:
        if "n_total" not in meta:
            raise ValueError(f"{path}: no n_total header; pass it explicitly")
        n_total = int(meta["n_total"])
    sigma = float(meta["noise_sigma"]) if "noise_sigma" in meta else None
    indices = np.array([int(r["index"]) for r in rows], dtype=np.int64)
    values = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
    order = np.argsort(indices, kind="stable")
    return SampleSet(n_total, indices[order], values[order], sigma)


def write_model(path, model: SpectralModel, n_total: Optional[int] = None,
                noise_sigma: Optional[float] = None, confidence=None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if n_total is not None:
            for line in _header(n_total, noise_sigma):
                fh.write(line + "\n")
        writer = csv.writer(fh)
        cols = ["omega", "amp_re", "amp_im"] + (["confidence"] if confidence is not None else [])
        writer.writerow(cols)
        for k, (w, a) in enumerate(zip(model.omegas, model.amplitudes)):
            row = [repr(float(w)), repr(float(a.real)), repr(float(a.imag))]
            if confidence is not None:
                row.append(repr(float(confidence[k])))
            writer.writerow(row)


def read_model(path) -> Tuple[SpectralModel, Optional[int], Optional[float]]:
    meta, rows = _read_commented(path)
    model = SpectralModel(
        np.array([float(r["omega"]) for r in rows]),
        np.array([float(r["amp_re"]) + 1j * float(r["amp_im"]) for r in rows]),
    )
    n_total = int(meta["n_total"]) if "n_total" in meta else None
    sigma = float(meta["noise_sigma"]) if "noise_sigma" in meta else None
    return model, n_total, sigma


def write_rows(path, rows: Iterable[dict], fieldnames: List[str]) -> None:
    """Plain CSV with a header row; floats written with ``repr``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (complex, np.complexfloating)):
        return format_complex(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def read_rows(path) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
