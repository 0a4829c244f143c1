"""Exponential-moving-average teacher updates on flat parameter vectors."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_EMA_KEEP = 0.9996


@dataclass(frozen=True)
class ParamVector:
    """A model's parameters flattened to one vector, plus an update counter.

    No structure is assumed; callers serialize whatever layout they like.
    """

    values: np.ndarray
    version: int = 0

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if not np.isfinite(v).all():
            raise ValueError("parameter values must be finite")
        if self.version < 0:
            raise ValueError(f"version must be >= 0, got {self.version}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]


def ema_step(teacher: ParamVector, student: ParamVector,
             k: float = DEFAULT_EMA_KEEP) -> ParamVector:
    """One decay step: ``k * teacher + (1 - k) * student``, elementwise.

    ``k = 1`` freezes the teacher, ``k = 0`` copies the student.  The
    returned vector's version is the teacher's plus one.
    """
    if not (math.isfinite(k) and 0.0 <= k <= 1.0):
        raise ValueError(f"decay k must lie in [0, 1], got {k}")
    if len(teacher) != len(student):
        raise ValueError(f"length mismatch: teacher has {len(teacher)} "
                         f"parameters, student has {len(student)}")
    return ParamVector(values=k * teacher.values + (1.0 - k) * student.values,
                       version=teacher.version + 1)
