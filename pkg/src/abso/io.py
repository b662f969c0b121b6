"""CSV artifacts for traces and archives.

Both files open with ``#``-prefixed header lines (``key=value``) carrying
the config hash, seed and anything else needed to reproduce the run, then a
normal CSV table.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .archive import Archive, ArchiveConfig
from .metrics import RunTrace

TRACE_COLUMNS = ("run_id", "seed", "function", "generation", "best_fitness",
                 "max_saliency", "archive_size", "fes_used")


def _fmt(x) -> str:
    return repr(float(x))


def _write(path: Path, header: dict, columns, rows):
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(buf.getvalue())
    tmp.replace(path)


def read_header(path: Path) -> dict:
    header = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            header[key] = value
    return header


def _read_rows(path: Path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_trace(path: Path, trace: RunTrace, run_id: str, seed: int, function_id: str,
                header: dict):
    rows = ([run_id, seed, function_id, g, _fmt(b), _fmt(s), a, fe]
            for g, b, s, a, fe in trace.rows())
    _write(Path(path), header, TRACE_COLUMNS, rows)


def read_trace(path: Path) -> RunTrace:
    trace = RunTrace()
    for r in _read_rows(Path(path)):
        trace.append(int(r["generation"]), float(r["best_fitness"]),
                     float(r["max_saliency"]), int(r["archive_size"]), int(r["fes_used"]))
    return trace


def archive_columns(dim: int):
    return ("function", *[f"x{i}" for i in range(dim)], "fitness", "saliency", "generation_found")


def write_archive(path: Path, archive: Archive, function_id: str, header: dict):
    rows = ([function_id, *map(_fmt, e.position), _fmt(e.fitness), _fmt(e.saliency),
             e.generation_found] for e in archive)
    _write(Path(path), header, archive_columns(archive.dim), rows)


def read_archive(path: Path, dim: int, cfg: ArchiveConfig) -> Archive:
    """Rebuild an archive from CSV without re-running the insertion rule."""
    rows = _read_rows(Path(path))
    arch = Archive(dim, cfg)
    if rows:
        arch.positions = np.array([[float(r[f"x{i}"]) for i in range(dim)] for r in rows])
        arch.fitness = np.array([float(r["fitness"]) for r in rows])
        arch.saliency = np.array([float(r["saliency"]) for r in rows])
        arch.generation = np.array([int(r["generation_found"]) for r in rows], dtype=np.int64)
    return arch
