"""Per-iteration solver records and their JSON / CSV forms."""

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = ["Status", "IterateRecord", "SolveTrace", "CSV_COLUMNS"]

CSV_COLUMNS = ("k", "primal_residual", "objective", "h_step", "dual_residual")


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class IterateRecord:
    k: int
    primal_residual: float
    objective: float
    h_step: float
    dual_residual: float


@dataclass
class SolveTrace:
    """Output of one solver run.

    ``iterates`` holds the stacked points ``w^0, ..., w^K`` as rows (or only
    ``w^0`` and ``w^K`` when the run was made with ``store_iterates=False``);
    ``history`` holds one row per performed iteration with the columns of
    :data:`CSV_COLUMNS`. ``n`` is the length of the primal part of ``w``.
    """

    solver_id: str
    params: dict
    n: int
    status: Status = Status.MAX_ITER
    iterates: np.ndarray = None
    history: np.ndarray = field(default_factory=lambda: np.empty((0, len(CSV_COLUMNS))))
    gamma: float = 1.0

    @property
    def n_iter(self):
        return len(self.history)

    @property
    def records(self):
        return [IterateRecord(int(row[0]), *map(float, row[1:])) for row in self.history]

    @property
    def final(self):
        return self.iterates[-1]

    @property
    def has_all_iterates(self):
        return self.iterates is not None and len(self.iterates) == self.n_iter + 1

    def column(self, name):
        return self.history[:, CSV_COLUMNS.index(name)]

    def split(self, w):
        return w[: self.n], w[self.n:]

    def to_dict(self):
        return {
            "solver_id": self.solver_id,
            "params": self.params,
            "status": self.status.value,
            "n": self.n,
            "gamma": self.gamma,
            "iterates": None if self.iterates is None else self.iterates.tolist(),
            "records": [dict(zip(CSV_COLUMNS, row)) for row in self.history.tolist()],
        }

    @classmethod
    def from_dict(cls, doc):
        rows = [[rec[c] for c in CSV_COLUMNS] for rec in doc["records"]]
        history = np.array(rows, dtype=float).reshape(-1, len(CSV_COLUMNS))
        iterates = doc.get("iterates")
        return cls(
            solver_id=doc["solver_id"],
            params=doc.get("params", {}),
            n=int(doc["n"]),
            status=Status(doc["status"]),
            iterates=None if iterates is None else np.array(iterates, dtype=float),
            history=history,
            gamma=float(doc.get("gamma", 1.0)),
        )

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def read_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.history:
                writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
