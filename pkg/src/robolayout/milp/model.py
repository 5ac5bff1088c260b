from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<=", "=", ">="

# Row name prefix -> constraint family.
FAMILY_PREFIX = {
    "occ": "occupancy",
    "cap": "capacity",
    "cons": "conservation",
    "junc": "junction",
    "pay": "payload",
}


def family_of(row_name: str) -> str:
    return FAMILY_PREFIX.get(row_name.split("_", 1)[0], "other")


@dataclass
class MilpModel:
    """min c.x  s.t.  A x (sense) rhs,  lb <= x <= ub,  x_j integer where ``is_int``."""

    var_names: list[str]
    c: np.ndarray
    A: sp.csr_matrix
    sense: list[str]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray
    row_names: list[str]
    meta: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def var_index(self) -> dict[str, int]:
        return {name: j for j, name in enumerate(self.var_names)}

    def row_families(self) -> list[str]:
        return [family_of(r) for r in self.row_names]

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float))


class ModelBuilder:
    """Incremental row/column assembly into a sparse :class:`MilpModel`."""

    def __init__(self):
        self.var_names: list[str] = []
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []

    def add_var(self, name, cost=0.0, lb=0.0, ub=1.0, integer=False) -> int:
        self.var_names.append(name)
        self._c.append(cost)
        self._lb.append(lb)
        self._ub.append(ub)
        self._int.append(integer)
        return len(self.var_names) - 1

    def add_row(self, name, terms, sense, rhs) -> int:
        i = len(self.row_names)
        for j, v in terms:
            self._rows.append(i)
            self._cols.append(j)
            self._vals.append(v)
        self.row_names.append(name)
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        return i

    def build(self, meta=None) -> MilpModel:
        m, n = len(self.row_names), len(self.var_names)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        A.sum_duplicates()
        return MilpModel(
            var_names=list(self.var_names),
            c=np.array(self._c, dtype=float),
            A=A,
            sense=list(self.sense),
            rhs=np.array(self.rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            is_int=np.array(self._int, dtype=bool),
            row_names=list(self.row_names),
            meta=dict(meta or {}),
        )
