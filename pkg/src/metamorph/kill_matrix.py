"""Run the MR suites once per catalogued fault and tabulate which relations fail."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from . import faults
from .correlation_mrs import CMRS, run_correlation_suite
from .errors import CleanBuildFails
from .forecaster import TrainConfig
from .forecaster_mrs import FMR_IDS, SuiteConfig, run_forecaster_suite
from .series import default_split, synth_table
from .verdict import FAIL, MrVerdict

KILLED, SURVIVED, NOT_APPLICABLE = "killed", "survived", "not-applicable"
MR_IDS = tuple(CMRS) + FMR_IDS


@dataclass(frozen=True)
class MatrixConfig:
    """Data sizes and training budget for the matrix; smaller than the clean-suite defaults to keep it quick."""

    n_train: int = 300
    n_val: int = 80
    table_rows: int = 300
    suite: SuiteConfig = field(default_factory=lambda: SuiteConfig(
        train=TrainConfig(epochs=5, hidden_size=8), n_runs=10, adversarial_steps=100))
    gate_seeds: tuple[int, ...] = (0, 1, 2)
    seed: int = 0


@dataclass(frozen=True)
class KillMatrix:
    cells: dict  # fault id -> {mr id -> killed | survived | not-applicable}
    mr_ids: tuple[str, ...] = MR_IDS
    details: dict = field(default_factory=dict)  # fault id -> [failing verdict details]

    @property
    def fault_ids(self) -> list[str]:
        return list(self.cells)

    def killed(self, fault_id: str) -> bool:
        return KILLED in self.cells[fault_id].values()

    def killers(self, fault_id: str) -> list[str]:
        return [m for m, c in self.cells[fault_id].items() if c == KILLED]

    @property
    def kill_rate(self) -> float:
        return sum(self.killed(f) for f in self.cells) / len(self.cells) if self.cells else 0.0

    def dead_mrs(self) -> list[str]:
        """MRs that kill no fault in the matrix."""
        return [m for m in self.mr_ids if not any(row.get(m) == KILLED for row in self.cells.values())]

    def missed_expectations(self) -> dict[str, list[str]]:
        """Documented killers that did not fail under their fault."""
        out = {}
        for fid in self.cells:
            spec = faults.get_fault(fid)
            missing = [m for m in spec.expected_killers if self.cells[fid].get(m) != KILLED]
            if missing:
                out[fid] = missing
        return out

    def to_dict(self) -> dict:
        return {
            "mr_ids": list(self.mr_ids),
            "kill_rate": self.kill_rate,
            "killed": sum(self.killed(f) for f in self.cells),
            "total": len(self.cells),
            "rows": [
                {"fault": fid, "killed": self.killed(fid), "killers": self.killers(fid),
                 "expected_killers": list(faults.get_fault(fid).expected_killers),
                 "cells": self.cells[fid], "details": self.details.get(fid, [])}
                for fid in self.cells
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fault", *self.mr_ids, "killed"])
        for fid, row in self.cells.items():
            w.writerow([fid, *(row[m] for m in self.mr_ids), int(self.killed(fid))])
        return buf.getvalue()


def run_suite(half: str | None, config: MatrixConfig, seed: int) -> list[MrVerdict]:
    """All MRs of one pipeline half (or both when ``half`` is None) on the default synthetic data."""
    verdicts: list[MrVerdict] = []
    if half in (None, "correlation"):
        verdicts += run_correlation_suite(synth_table(config.table_rows, seed), seed=seed)
    if half in (None, "forecaster"):
        train_s, val_s = default_split(seed, config.n_train, config.n_val)
        suite = config.suite
        suite = SuiteConfig(suite.train.replace(seed=seed), suite.n_runs, suite.scaling_cases,
                            suite.adversarial_steps, suite.adversarial_windows, suite.timestep_max)
        verdicts += run_forecaster_suite(train_s, val_s, suite).verdicts
    return verdicts


def clean_gate(config: MatrixConfig) -> dict[int, list[MrVerdict]]:
    """Every MR must avoid failing on the unmutated pipeline for each gate seed."""
    out = {}
    with faults.injected(None):
        for seed in config.gate_seeds:
            verdicts = run_suite(None, config, seed)
            failing = [v for v in verdicts if v.failed]
            if failing:
                names = ", ".join(f"{v.mr_id} ({v.details})" for v in failing)
                raise CleanBuildFails(f"clean build fails at seed {seed}: {names}")
            out[seed] = verdicts
    return out


def run_kill_matrix(fault_ids=None, config: MatrixConfig = MatrixConfig(), gate: bool = True,
                    progress=None) -> KillMatrix:
    """Activate each fault in turn and record which MRs fail under it.

    MRs belonging to the other half of the pipeline cannot observe the fault
    site and are marked not-applicable.
    """
    if gate:
        clean_gate(config)
    ids = [f.id for f in faults.list_faults()] if fault_ids is None else list(fault_ids)
    specs = [faults.get_fault(f) for f in ids]
    cells, details = {}, {}
    for spec in specs:
        with faults.injected(spec.id):
            verdicts = run_suite(spec.half, config, config.seed)
        failed = {v.mr_id for v in verdicts if v.status == FAIL}
        ran = {v.mr_id for v in verdicts}
        cells[spec.id] = {
            m: (KILLED if m in failed else SURVIVED) if m in ran else NOT_APPLICABLE for m in MR_IDS
        }
        details[spec.id] = [f"{v.mr_id}: {v.details}" for v in verdicts if v.status == FAIL]
        if progress:
            progress(spec.id, sorted(failed))
    return KillMatrix(cells, MR_IDS, details)
