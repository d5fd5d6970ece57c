"""Recompute the five reference tables and compare them with the golden values.

Golden files live in ``edpqm/golden/table<N>.csv`` with columns
``row_key,col_key,paper``; set ``EDPQM_GOLDEN_DIR`` to read them elsewhere.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from .observables import closure_correction, closure_sum, dipole_sum_rule
from .spectra import OscillatorModel

TOLERANCE = 5e-6

GAMMAS = (0.01, 0.05, 0.10, 0.25, 0.50, -0.01, -0.05, -0.10, -0.25, -0.50)
ABS_GAMMAS = GAMMAS[:5]

COLUMNS = {
    1: ("exact", "linear_approx", "nmax1", "nmax3"),
    2: ("exact", "linear_approx", "nmax2", "nmax4", "nmax6"),
    3: ("nmax1", "nmax3", "nmax5", "nmax7", "exact"),
    4: ("psi2_pos", "psi4_pos", "psi2_neg", "psi4_neg"),
    5: ("nmax1", "nmax3", "nmax5", "exact"),
}

TITLES = {
    1: "<x^2>_0 for linear energy dependence",
    2: "<x^4>_0 for linear energy dependence",
    3: "dipole sum rule for linear energy dependence",
    4: "closure corrections for sqrt(E) dependence",
    5: "<x^2>_0 for sqrt(E) dependence",
}


def row_key(gamma: float) -> str:
    return f"{gamma:.2f}"


@dataclass(frozen=True)
class Cell:
    table_id: int
    row_key: str
    col_key: str
    computed: float
    paper: Optional[float] = None

    @property
    def abs_diff(self) -> Optional[float]:
        if self.paper is None:
            return None
        return abs(self.computed - self.paper)

    @property
    def passed(self) -> bool:
        return self.abs_diff is not None and self.abs_diff <= TOLERANCE

    @property
    def status(self) -> str:
        if self.paper is None:
            return "MISSING"
        return "PASS" if self.passed else "FAIL"

    def record(self) -> dict:
        return {
            "table_id": self.table_id,
            "row_key": self.row_key,
            "col_key": self.col_key,
            "computed": f"{self.computed:.6f}",
            "paper": "" if self.paper is None else f"{self.paper:.6f}",
            "abs_diff": "" if self.abs_diff is None else f"{self.abs_diff:.3e}",
            "status": self.status,
        }


def _nmax(col: str) -> int:
    return int(col.removeprefix("nmax"))


def _table1(gamma):
    rep = closure_sum(0, 1, 3, OscillatorModel.linear(gamma))
    return {
        "exact": rep.exact,
        "linear_approx": 0.5 * (1 - 0.75 * gamma),
        "nmax1": rep.partial_sum(1),
        "nmax3": rep.partial_sum(3),
    }


def _table2(gamma):
    rep = closure_sum(0, 2, 6, OscillatorModel.linear(gamma))
    out = {"exact": rep.exact, "linear_approx": 0.75 * (1 - 1.5 * gamma)}
    for col in ("nmax2", "nmax4", "nmax6"):
        out[col] = rep.partial_sum(_nmax(col))
    return out


def _table3(gamma):
    rep = dipole_sum_rule(OscillatorModel.linear(gamma), n_max=7)
    out = {col: rep.partial_sum(_nmax(col)) for col in ("nmax1", "nmax3", "nmax5", "nmax7")}
    out["exact"] = rep.exact
    return out


def _table4(abs_gamma):
    pos = OscillatorModel.sqrt(abs_gamma)
    neg = OscillatorModel.sqrt(-abs_gamma)
    return {
        "psi2_pos": closure_correction(2, 0, pos),
        "psi4_pos": closure_correction(4, 0, pos),
        "psi2_neg": closure_correction(2, 0, neg),
        "psi4_neg": closure_correction(4, 0, neg),
    }


def _table5(gamma):
    rep = closure_sum(0, 1, 5, OscillatorModel.sqrt(gamma))
    out = {col: rep.partial_sum(_nmax(col)) for col in ("nmax1", "nmax3", "nmax5")}
    out["exact"] = rep.exact
    return out


_ROWS: dict[int, tuple[tuple[float, ...], Callable[[float], dict]]] = {
    1: (GAMMAS, _table1),
    2: (GAMMAS, _table2),
    3: (GAMMAS, _table3),
    4: (ABS_GAMMAS, _table4),
    5: (GAMMAS, _table5),
}


def golden_dir() -> Path:
    env = os.environ.get("EDPQM_GOLDEN_DIR")
    if env:
        return Path(env)
    return Path(str(resources.files("edpqm") / "golden"))


def load_golden(table_id: int, directory: Optional[Path] = None) -> dict[tuple[str, str], float]:
    path = Path(directory or golden_dir()) / f"table{table_id}.csv"
    with open(path, newline="") as fh:
        return {(r["row_key"], r["col_key"]): float(r["paper"]) for r in csv.DictReader(fh)}


def compute_table(table_id: int) -> dict[tuple[str, str], float]:
    """Computed value of every cell, keyed by (row_key, col_key)."""
    if table_id not in _ROWS:
        raise ValueError(f"unknown table {table_id}; choose 1..5")
    rows, fn = _ROWS[table_id]
    out = {}
    for g in rows:
        values = fn(g)
        for col in COLUMNS[table_id]:
            out[(row_key(g), col)] = float(values[col])
    return out


def reproduce(table_id: int, golden: Optional[dict] = None) -> list[Cell]:
    """Cells in row then column order, paired with their golden values."""
    golden = load_golden(table_id) if golden is None else golden
    computed = compute_table(table_id)
    return [
        Cell(table_id, r, c, v, golden.get((r, c)))
        for (r, c), v in computed.items()
    ]
