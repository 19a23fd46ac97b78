"""Protocol spec parsing, hashing and CSV/JSON artifact writing."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import jsonschema
import numpy as np

from .errors import SpecError

VERSION = "0.1.0"

_PARAMS = {
    "type": "object",
    "properties": {
        "r": {"type": "number"},
        "phi": {"type": "number"},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["r", "epsilon"],
    "additionalProperties": False,
}

SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "scheme": {"enum": ["trap-closed", "trap-open", "raman-closed", "raman-open", "jc-open"]},
        "initial": _PARAMS,
        "target": _PARAMS,
        "tf": {"type": "number", "exclusiveMinimum": 0},
        "grid_points": {"type": "integer", "minimum": 11},
        "fock_dim": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "steps": {"type": "integer", "minimum": 10},
        "phase_override": {"type": "boolean"},
        "units": {
            "type": "object",
            "properties": {
                "hbar": {"type": "number", "exclusiveMinimum": 0},
                "mass": {"type": "number", "exclusiveMinimum": 0},
                "omega0": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "stochastic": {
            "type": "object",
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "dt": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "lasers": {
            "type": "object",
            "properties": {
                "lamb_dicke": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 4},
                "detuning": {"type": "number"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["scheme", "initial", "target", "tf"],
    "additionalProperties": False,
}

GRID_SCHEMA = {
    "type": "object",
    "properties": {
        "omega_ratio": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2,
                        "maxItems": 3},
        "beta_ratio": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2,
                       "maxItems": 3},
        "points": {"type": "integer", "minimum": 2},
        "epsilon0": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["omega_ratio", "beta_ratio"],
    "additionalProperties": False,
}


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc


def validate(doc, schema):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise SpecError(f"invalid spec: {exc.message}") from exc
    return doc


def canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def spec_hash(doc) -> str:
    return hashlib.sha256(canonical(doc).encode()).hexdigest()


def run_dir(out_dir, digest) -> Path:
    p = Path(out_dir) / digest[:16]
    p.mkdir(parents=True, exist_ok=True)
    return p


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, columns, rows, digest, extra_header=""):
    """Comma-separated, LF endings, provenance comment then header row."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# spec_hash={digest}, version={VERSION}{extra_header}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_table(path, table: dict, digest):
    cols = list(table)
    rows = zip(*(np.asarray(table[c]) for c in cols))
    write_csv(path, cols, rows, digest)


def read_csv(path) -> dict:
    """Read a CSV written by :func:`write_csv` (comment lines skipped)."""
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise SpecError(f"{path} is empty")
    cols = lines[0].split(",")
    try:
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise SpecError(f"non-numeric entry in {path}") from exc
    if data.ndim != 2 or data.shape[1] != len(cols):
        raise SpecError(f"ragged rows in {path}")
    return {c: data[:, i] for i, c in enumerate(cols)}


def write_json(path, doc, digest):
    out = dict(doc)
    out["spec_hash"] = digest
    out["version"] = VERSION
    with open(path, "w", newline="\n") as fh:
        json.dump(_plain(out), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def threads():
    try:
        return max(1, int(os.environ.get("SQZ_STA_THREADS", "1")))
    except ValueError:
        return 1
