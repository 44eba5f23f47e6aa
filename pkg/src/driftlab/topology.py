"""Stream topologies and movement matrices.

Builds the diffusion matrix D and the advection matrix Q for a linear
chain of n patches with one of three downstream boundary regimes:

  - case a (stream to lake):   D tridiagonal with zero column sums,
    Q lower bidiagonal, column n of Q sums to -1;
  - case b (stream to ocean):  same as case a except D[n,n] = -2;
  - case c (inland stream):    same as case a except Q[n,n] = 0.

The connection matrix L = d*D + q*Q combines undirected diffusion at
rate d with downstream advection at rate q.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class BoundaryCase(Enum):
    """Downstream boundary regime of the stream."""

    StreamToLake = "a"
    StreamToOcean = "b"
    InlandStream = "c"

    @classmethod
    def from_letter(cls, letter: str) -> "BoundaryCase":
        for case in cls:
            if case.value == letter.lower():
                return case
        raise ValueError(f"unknown boundary case {letter!r}; expected a, b, or c")


@dataclass(frozen=True)
class StreamTopology:
    """A linear chain of n >= 2 patches with a downstream boundary case."""

    n: int
    case: BoundaryCase

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"patch count must be >= 2, got {self.n}")


@dataclass(frozen=True)
class MovementMatrices:
    """Dense n x n diffusion (D) and advection (Q) matrices."""

    D: np.ndarray
    Q: np.ndarray


def build_matrices(topo: StreamTopology) -> MovementMatrices:
    """Construct D and Q for the given topology.

    D is tridiagonal: off-diagonals 1, interior diagonal -2, end
    diagonals -1 (case b: D[n,n] = -2 as well).  Q is lower bidiagonal:
    subdiagonal 1, diagonal -1 (case c: Q[n,n] = 0).
    """
    n = topo.n
    D = np.zeros((n, n))
    idx = np.arange(n - 1)
    D[idx, idx + 1] = 1.0
    D[idx + 1, idx] = 1.0
    D[np.arange(n), np.arange(n)] = -2.0
    D[0, 0] = -1.0
    if topo.case is not BoundaryCase.StreamToOcean:
        D[n - 1, n - 1] = -1.0

    Q = np.zeros((n, n))
    Q[idx + 1, idx] = 1.0
    Q[np.arange(n), np.arange(n)] = -1.0
    if topo.case is BoundaryCase.InlandStream:
        Q[n - 1, n - 1] = 0.0

    D.setflags(write=False)
    Q.setflags(write=False)
    return MovementMatrices(D=D, Q=Q)


def build_connection(topo: StreamTopology, d: float, q: float) -> np.ndarray:
    """Return L = d*D + q*Q for diffusion rate d > 0 and advection q >= 0."""
    if d <= 0:
        raise ValueError(f"diffusion rate must be positive, got {d}")
    if q < 0:
        raise ValueError(f"advection rate must be nonnegative, got {q}")
    mats = build_matrices(topo)
    return d * mats.D + q * mats.Q


def _strongly_connected(A: np.ndarray) -> bool:
    """Strong connectivity of the off-diagonal sparsity graph of A."""
    n = A.shape[0]
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    adj = off != 0.0

    def reachable(graph):
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(graph[i]):
                if j not in seen:
                    seen.add(int(j))
                    stack.append(int(j))
        return len(seen) == n

    return reachable(adj) and reachable(adj.T)


@dataclass(frozen=True)
class ValidationReport:
    """Per-invariant pass/fail results for a MovementMatrices pair."""

    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failures(self):
        return [name for name, passed in self.checks.items() if not passed]


def validate(mats: MovementMatrices, topo: StreamTopology,
             tol: float = 1e-12) -> ValidationReport:
    """Check the structural invariants of D and Q for topo.case.

    Report-only: never raises on a failed invariant.  Irreducibility is
    checked by strong-connectivity search on the off-diagonal sparsity
    graph of D.
    """
    n = topo.n
    D, Q = mats.D, mats.Q
    checks = {}

    checks["shape"] = D.shape == (n, n) and Q.shape == (n, n)
    if not checks["shape"]:
        return ValidationReport(checks=checks)

    off_mask = ~np.eye(n, dtype=bool)
    checks["essentially_nonnegative"] = (
        np.all(D[off_mask] >= 0) and np.all(Q[off_mask] >= 0)
    )
    checks["irreducible"] = _strongly_connected(D)

    tri_mask = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) > 1
    checks["D_tridiagonal"] = np.all(D[tri_mask] == 0)
    lower_bi = np.tril(np.ones((n, n)), -1) - np.tril(np.ones((n, n)), -2)
    bi_mask = (np.eye(n) + lower_bi) == 0
    checks["Q_lower_bidiagonal"] = np.all(Q[bi_mask] == 0)

    d_col = D.sum(axis=0)
    q_col = Q.sum(axis=0)
    if topo.case is BoundaryCase.StreamToOcean:
        d_expected = np.zeros(n)
        d_expected[-1] = -1.0
    else:
        d_expected = np.zeros(n)
    if topo.case is BoundaryCase.InlandStream:
        q_expected = np.zeros(n)
    else:
        q_expected = np.zeros(n)
        q_expected[-1] = -1.0
    checks["D_column_sums"] = np.allclose(d_col, d_expected, atol=tol)
    checks["Q_column_sums"] = np.allclose(q_col, q_expected, atol=tol)

    return ValidationReport(checks=checks)
