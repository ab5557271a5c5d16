"""Predicted-versus-measured records emitted by the constructions."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np


def _plain(v: Any):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


@dataclass
class Report:
    name: str
    params: dict
    predicted: Optional[float] = None
    measured: Optional[float] = None
    stderr: Optional[float] = None
    rank_bound: Optional[int] = None
    rank_measured: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain({"name": self.name, "params": self.params, "predicted": self.predicted,
                       "measured": self.measured, "stderr": self.stderr,
                       "rank_bound": self.rank_bound, "rank_measured": self.rank_measured,
                       "extra": self.extra})

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)
