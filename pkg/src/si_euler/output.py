"""Deterministic CSV/JSON writers and atomic bundle placement."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

HEADERS = {
    "diagnostics.csv": ("t", "S", "h1dual", "mean", "l2", "min", "max"),
    "snapshots.csv": ("t", "theta", "g", "G"),
    "markers.csv": ("t", "label", "chi", "dchi", "F", "y"),
    "jumps.csv": ("t", "jump", "position", "velocity"),
    "ode.csv": ("t", "y", "dy", "F", "weighted_integral"),
    "selfcheck.csv": ("check", "passed", "defect", "tolerance"),
}


def fmt(x) -> str:
    """17 significant digits; integers and strings verbatim."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path: Path, rows) -> None:
    name = path.name
    header = HEADERS[name]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# si-euler {name[:-4]} schema {SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"{name}: row of length {len(row)}, expected {len(header)}")
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    return obj


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict:
    import scipy

    from . import __version__

    return {"si_euler": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(directory: Path, config: dict, status: str) -> None:
    files = sorted(p for p in directory.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest = {
        "schema": SCHEMA_VERSION,
        "status": status,
        "config": config,
        "versions": versions(),
        "files": {str(p.relative_to(directory)): sha256(p) for p in files},
    }
    write_json(directory / "manifest.json", manifest)


@contextmanager
def atomic_bundle(out: Path):
    """Yield a temporary directory next to `out`; on success it replaces `out`.

    On any exception the temporary directory is removed and `out` is untouched.
    """
    out = Path(out).resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if out.exists():
        old = Path(tempfile.mkdtemp(prefix=f".{out.name}.old.", dir=out.parent))
        os.rename(out, old / "prev")
    os.rename(tmp, out)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)
