"""JSON report envelopes and CSV helpers."""

import csv
import hashlib
import json
import math
from datetime import datetime, timezone

from . import __version__

__all__ = ["file_digest", "make_envelope", "dumps", "write_rows_csv"]


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def make_envelope(command, payload, inputs=(), seed=None):
    """Wrap a payload with provenance.

    The timestamp lives under ``metadata`` only, so payloads of repeated
    runs compare byte-for-byte.
    """
    return {
        "tool": "topoprune",
        "tool_version": __version__,
        "command": command,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "seed": seed,
        "payload": payload,
        "metadata": {"created": datetime.now(timezone.utc).isoformat()},
    }


def _clean(obj):
    # strict JSON has no NaN/Inf
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj, **kwargs):
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False, **kwargs)


def write_rows_csv(path, rows, fieldnames=None):
    rows = list(rows)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
