"""JSON run reports. Everything except the ``timing`` block is a pure function of inputs and seed."""

from __future__ import annotations

import hashlib
import json
import math
import os
import platform
from dataclasses import dataclass, field

import numpy as np

from .verdict import FAIL, PASS, WARN, MrVerdict

SCHEMA_VERSION = "1.0"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)  # JSON has no NaN/inf
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def file_digest(path) -> dict:
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return {"path": os.fspath(path), "sha256": digest}


def summary_counts(verdicts: list[MrVerdict]) -> dict:
    counts = {PASS: 0, WARN: 0, FAIL: 0}
    for v in verdicts:
        counts[v.status] += 1
    return counts


@dataclass
class RunReport:
    suite: str
    verdicts: list[MrVerdict] = field(default_factory=list)
    baselines: dict | None = None
    environment: dict = field(default_factory=dict)
    payload: dict = field(default_factory=dict)  # suite-specific results (curves, matrices, searches)
    timing: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(v.failed for v in self.verdicts)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "environment": self.environment,
            "summary": summary_counts(self.verdicts),
            "verdicts": [v.to_dict() for v in self.verdicts],
            "baselines": self.baselines,
            "results": self.payload,
        }
        if include_timing:
            d["timing"] = self.timing
        return _jsonable(d)

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def environment(config, fault: str | None, inputs: dict | None = None) -> dict:
    return {
        "seed": config.seed,
        "config": config.to_dict(),
        "fault": fault,
        "inputs": inputs or {},
        "numpy": np.__version__,
        "python": platform.python_version(),
    }
