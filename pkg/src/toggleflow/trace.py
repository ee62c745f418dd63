"""Per-iteration solver traces and their JSON-lines form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np

__all__ = ["SolverTrace", "SolveResult", "as_rng"]


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an integer seed or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else int(rng))


@dataclass
class SolverTrace:
    """Iteration records plus an echo of the run configuration.

    Each record holds ``t`` (1-based iteration), ``elem`` (sampled tree edge
    or arc), ``delta`` (toggle amount) and, when the solver was asked to
    track them, ``obj`` (primal or dual objective after the step) and
    ``gap``.
    """

    config: Dict[str, Any] = field(default_factory=dict)
    records: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    def add(self, t: int, elem, delta: float, obj: Optional[float] = None, gap=None, **extra) -> None:
        rec = {"t": int(t), "elem": _plain(elem), "delta": float(delta)}
        if obj is not None:
            rec["obj"] = float(obj)
        if gap is not None:
            rec["gap"] = float(gap)
        rec.update(_plain(extra))
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        """Values of ``name`` per record, NaN where a record lacks it."""
        return np.array([rec.get(name, np.nan) for rec in self.records], dtype=float)

    def elements(self) -> list:
        return [rec["elem"] for rec in self.records]

    def to_jsonl(self, fh) -> None:
        """Write one JSON object per iteration, then ``{"summary": ...}``."""
        for rec in self.records:
            fh.write(json.dumps(rec) + "\n")
        fh.write(json.dumps({"summary": {**_plain(self.config), **_plain(self.summary)}}) + "\n")


class SolveResult(NamedTuple):
    x: Optional[np.ndarray]
    f: Optional[np.ndarray]
    trace: SolverTrace


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
