"""Spectral bound of essentially nonnegative matrices.

The principal eigenvalue lambda_1(d, q, r) of d*D + q*Q + diag(r) drives
everything else: persistence thresholds, critical advection curves, and
invasion verdicts.  The main solver is a shifted power iteration that is
exact for this matrix class; a dense eigensolver backs it up when the
subdominant gap is too small for the iteration to converge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from driftlab.topology import (
    BoundaryCase,
    StreamTopology,
    build_connection,
    build_matrices,
    _strongly_connected,
)


class NotIrreducible(ValueError):
    """The matrix's off-diagonal graph is not strongly connected."""


class NonConvergence(RuntimeError):
    """Power iteration exhausted its budget without meeting tolerance."""


@dataclass(frozen=True)
class EigenResult:
    """Spectral bound with its normalized positive eigenvector.

    phi is scaled so sum(phi) = 1; residual is ||A phi - lambda phi||_inf.
    """

    lam: float
    phi: np.ndarray
    residual: float
    iterations: int


class MinusInfinity:
    """Tagged marker for a -infinity limit (never a float sentinel)."""

    def __repr__(self):
        return "MinusInfinity"


MINUS_INFINITY = MinusInfinity()

_RESIDUAL_RTOL = 1e-13
_MAX_ITER = 200_000


def _power_iteration(A: np.ndarray, max_iter: int = _MAX_ITER):
    """Shifted power iteration on B = A + sigma*I with sigma = 1 + max|A_ii|.

    B is nonnegative with strictly positive diagonal, hence primitive, so
    the iteration converges to the Perron root and positive eigenvector.
    Returns (lam, phi, residual, iterations) or None on budget exhaustion.
    """
    n = A.shape[0]
    sigma = 1.0 + np.max(np.abs(np.diag(A)))
    B = A + sigma * np.eye(n)
    phi = np.full(n, 1.0 / n)
    rho = 0.0
    # Stagnation guard: if the residual stops improving we bail out early
    # rather than burning the whole budget (the dense fallback takes over).
    best = np.inf
    since_best = 0
    for k in range(1, max_iter + 1):
        w = B @ phi
        rho = w.sum()  # sum(phi) == 1, so this is the Rayleigh-like estimate
        resid = np.max(np.abs(w - rho * phi))
        if resid <= _RESIDUAL_RTOL * (1.0 + abs(rho)):
            phi = w / w.sum()
            return rho - sigma, phi, resid, k
        if resid < best * 0.999999:
            best = resid
            since_best = 0
        else:
            since_best += 1
            if since_best > 2000:
                return None
        phi = w / rho
    return None


def _dense_fallback(A: np.ndarray):
    """Full-spectrum eigensolve; rightmost real part, eigenvector by
    inverse iteration at that shift."""
    eigvals = np.linalg.eigvals(A)
    lam = float(np.max(eigvals.real))
    n = A.shape[0]
    M = A - (lam + 1e-12) * np.eye(n)
    phi = np.full(n, 1.0 / n)
    for _ in range(200):
        try:
            phi_new = np.linalg.solve(M, phi)
        except np.linalg.LinAlgError:
            M = A - (lam + 1e-9) * np.eye(n)
            phi_new = np.linalg.solve(M, phi)
        phi_new = phi_new / np.max(np.abs(phi_new))
        if np.allclose(phi_new, phi, atol=1e-15) or np.allclose(phi_new, -phi, atol=1e-15):
            phi = phi_new
            break
        phi = phi_new
    if phi.sum() < 0:
        phi = -phi
    phi = phi / phi.sum()
    resid = float(np.max(np.abs(A @ phi - lam * phi)))
    return lam, phi, resid


def spectral_bound(A: np.ndarray) -> EigenResult:
    """Principal eigenvalue and positive eigenvector of an irreducible
    essentially nonnegative matrix.

    Raises NotIrreducible for inputs outside the matrix class.  Falls
    back to a dense eigensolver when power iteration stalls.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0):
        raise NotIrreducible("off-diagonal entries must be nonnegative")
    if not _strongly_connected(A):
        raise NotIrreducible("matrix graph is not strongly connected")

    result = _power_iteration(A)
    if result is not None:
        lam, phi, resid, iters = result
        return EigenResult(lam=lam, phi=phi, residual=resid, iterations=iters)

    lam, phi, resid = _dense_fallback(A)
    return EigenResult(lam=lam, phi=phi, residual=resid, iterations=-1)


def lambda1(topo: StreamTopology, d: float, q: float, r) -> float:
    """Principal eigenvalue of d*D + q*Q + diag(r)."""
    return lambda1_result(topo, d, q, r).lam


def lambda1_result(topo: StreamTopology, d: float, q: float, r) -> EigenResult:
    """Like lambda1 but returns the full EigenResult (eigenvector included)."""
    r = _as_profile(topo, r)
    A = build_connection(topo, d, q) + np.diag(r)
    return spectral_bound(A)


def _as_profile(topo: StreamTopology, r) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if r.size == 1:
        r = np.full(topo.n, r.item())
    if r.size != topo.n:
        raise ValueError(f"growth profile has length {r.size}, expected {topo.n}")
    return r


def geometric_weights(topo: StreamTopology, d: float, q: float) -> np.ndarray:
    """Weights beta_i = (d/(d+q))^(i-1); beta_1 = 1, strictly decreasing
    when q > 0."""
    if d <= 0:
        raise ValueError("d must be positive")
    if q < 0:
        raise ValueError("q must be nonnegative")
    ratio = d / (d + q)
    return ratio ** np.arange(topo.n)


def dlambda1_dq(topo: StreamTopology, d: float, q: float, r) -> float:
    """Analytic derivative of lambda_1 with respect to the advection rate.

    Evaluates (sum_ij beta_i Q_ij phi_i phi_j) / (sum_i beta_i phi_i^2)
    at the principal eigenvector; strictly negative in cases a and b.
    """
    res = lambda1_result(topo, d, q, r)
    phi = res.phi
    beta = geometric_weights(topo, d, q)
    Q = build_matrices(topo).Q
    numer = float(np.einsum("i,ij,i,j->", beta, Q, phi, phi))
    denom = float(np.sum(beta * phi**2))
    # denom >= beta_n * min(phi)^2 > 0, so no guard is needed.
    return numer / denom


def large_diffusion_limit(topo: StreamTopology, q: float, r):
    """Limit of lambda_1 as d -> infinity.

    Case a: (sum r_i - q)/n.  Case b: MinusInfinity (s(D) < 0).
    Case c: mean(r) (no advective loss; Q has zero column sums).
    """
    if q < 0:
        raise ValueError("q must be nonnegative")
    r = _as_profile(topo, r)
    if topo.case is BoundaryCase.StreamToOcean:
        return MINUS_INFINITY
    if topo.case is BoundaryCase.InlandStream:
        return float(np.mean(r))
    return float((r.sum() - q) / topo.n)


def small_diffusion_limit(topo: StreamTopology, q: float, r) -> float:
    """Limit of lambda_1 as d -> 0: max(r_i) - q (cases a and b)."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    r = _as_profile(topo, r)
    if topo.case is BoundaryCase.InlandStream:
        # Patch n has no advective loss in case c.
        losses = np.full(topo.n, q)
        losses[-1] = 0.0
        return float(np.max(r - losses))
    return float(np.max(r) - q)
