"""Rectangular assignment solving plus an exhaustive brute-force oracle.

Rows are ground-truth entities (G), columns are predictions (K >= G).
Infeasible pairs carry the finite sentinel ``BIG`` so the solver's
arithmetic never sees infinities; matched sentinel entries are reported
in ``infeasible_rows``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import solve_lap

# Finite stand-in for "impossible pair".
BIG = 1e8

# Deterministic tie-break: add eps * (i*K + j) before solving so equal-cost
# assignments resolve toward small column indices.
TIE_EPS = 1e-12

# brute_force refuses instances with more injective assignments than this.
MAX_BRUTE_FORCE = 10**7

_CHUNK = 200_000


@dataclass(frozen=True)
class CostMatrix:
    """G x K pairwise matching costs (rows: ground truth, cols: predictions)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"cost matrix must be 2-D, got shape {v.shape}")
        g, k = v.shape
        if g < 1:
            raise ValueError("cost matrix needs at least one row")
        if k < g:
            raise ValueError(f"cost matrix needs at least as many columns as rows, got {g}x{k}")
        if not np.isfinite(v).all():
            raise ValueError("cost matrix entries must be finite (use BIG for infeasible pairs)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Assignment:
    """An injective row->column map with its (unperturbed) total cost."""

    match: tuple[int, ...]
    total_cost: float
    infeasible_rows: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.match)) != len(self.match):
            raise ValueError(f"match entries must be distinct, got {self.match}")


def _perturbed(values: np.ndarray) -> np.ndarray:
    g, k = values.shape
    bias = (np.arange(g, dtype=np.float64)[:, None] * k
            + np.arange(k, dtype=np.float64)[None, :])
    return values + TIE_EPS * bias


def _finish(values: np.ndarray, match: np.ndarray) -> Assignment:
    rows = np.arange(values.shape[0])
    picked = values[rows, match]
    total = float(picked.sum())
    infeasible = tuple(int(i) for i in rows[picked >= BIG / 2])
    return Assignment(match=tuple(int(j) for j in match),
                      total_cost=total, infeasible_rows=infeasible)


def hungarian(c: CostMatrix) -> Assignment:
    """Minimum-cost assignment via the Hungarian method.

    Ties are broken deterministically by the ``TIE_EPS`` perturbation;
    ``total_cost`` is reported from the unperturbed matrix.
    """
    match = solve_lap(_perturbed(c.values))
    return _finish(c.values, match)


def brute_force(c: CostMatrix) -> Assignment:
    """Exact minimum by enumerating every injective assignment.

    Test oracle: same perturbation-based tie-break as :func:`hungarian`,
    with remaining exact ties resolved to the lexicographically smallest
    match vector.  Refuses instances with more than ``MAX_BRUTE_FORCE``
    assignments.
    """
    g, k = c.values.shape
    count = math.perm(k, g)
    if count > MAX_BRUTE_FORCE:
        raise ValueError(f"{g}x{k} has {count} injective assignments (limit {MAX_BRUTE_FORCE})")

    pert = _perturbed(c.values)
    rows = np.arange(g)
    best_cost = np.inf
    best: np.ndarray | None = None
    perms = itertools.permutations(range(k), g)
    while True:
        chunk = np.array(list(itertools.islice(perms, _CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            break
        totals = pert[rows[None, :], chunk].sum(axis=1)
        idx = int(np.argmin(totals))
        # Strict < keeps the earlier (lexicographically smaller) permutation
        # on exact ties, matching np.argmin's first-occurrence rule in-chunk.
        if totals[idx] < best_cost:
            best_cost = float(totals[idx])
            best = chunk[idx]
    assert best is not None
    return _finish(c.values, best)
