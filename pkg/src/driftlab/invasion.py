"""Critical curves and invasion classification for the competition model.

Computes the persistence threshold q*_r(d), the diffusion cutoff d*, the
invasion curve q*_{r-u*}(d) with its analytic derivative, the competing
threshold q2*(d2), the boundary eigenvalue lambda1*(d2), and classifies
(d2, q2) points into the G/S regions with stability verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from driftlab.topology import BoundaryCase, StreamTopology, build_matrices
from driftlab.spectral import (
    _as_profile,
    geometric_weights,
    lambda1,
    lambda1_result,
)
from driftlab.equilibrium import (
    EXTINCTION_BAND,
    SpeciesParams,
    single_species_equilibrium,
)


class NoRoot(RuntimeError):
    """The sign condition failed on the expanded bracket."""


class NotPersistentAtZeroAdvection(RuntimeError):
    """lambda_1(d, 0, r) <= 0, so no advection threshold exists."""


class ResidentNotEstablished(RuntimeError):
    """The resident species' establishment assumption fails."""


class InvaderNotEstablished(RuntimeError):
    """The invader's semi-trivial equilibrium does not exist."""


class OutOfRange(RuntimeError):
    """No sign change where theory promises one; flags an inconsistency."""


class NotApplicable:
    """Tagged value: the quantity is undefined in this regime."""

    def __repr__(self):
        return "NotApplicable"


NOT_APPLICABLE = NotApplicable()

ROOT_TOL = 1e-10
CURVE_TOL = 1e-8
BOUNDARY_BAND = 1e-8
MARGINAL_BAND = 1e-10


class RegionLabel(Enum):
    G1 = "G1"
    G2 = "G2"
    S1only = "S1only"
    S2only = "S2only"
    Boundary = "Boundary"
    G1star = "G1star"
    G2star = "G2star"
    S1star = "S1star"
    S2star = "S2star"


@dataclass(frozen=True)
class CurveSample:
    d: float
    q_star: float
    derivative: float | None = None
    lambda1_star: float | None = None


@dataclass(frozen=True)
class CriticalCurve:
    samples: list
    profile_tag: str  # "r" or "r-u*"


@dataclass(frozen=True)
class InvasionReport:
    region: RegionLabel
    e1_stable: str  # Stable | Unstable | Marginal
    e2_stable: str  # Stable | Unstable | Marginal | NotExists
    predicted: str  # E1GloballyStable | E2GloballyStable | Coexist | Bistable | Undetermined


def _bisect(f, lo, hi, tol):
    """Bisection for f(lo) > 0 > f(hi) (or the reverse), to |hi-lo| <= tol."""
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise NoRoot(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def d_star(topo: StreamTopology, r):
    """Root of d -> lambda_1(d, 0, r): the diffusion cutoff for
    persistence at zero advection.

    Case a with sum(r) > 0 has no root (lambda_1 stays positive):
    returns the NotApplicable marker.  Raises NoRoot when max(r) <= 0.
    """
    r_vec = _as_profile(topo, r)
    if np.max(r_vec) <= 0:
        raise NoRoot("max growth rate <= 0: lambda_1(d, 0, r) < 0 everywhere")
    if topo.case is BoundaryCase.StreamToLake and np.sum(r_vec) > 0:
        return NOT_APPLICABLE

    def f(d):
        return lambda1(topo, d, 0.0, r_vec)

    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise NoRoot("lambda_1(d, 0, r) stayed positive up to d = 1e12")
    lo = hi / 2.0 if hi > 1.0 else 1e-8
    while f(lo) < 0:
        lo /= 2.0
        if lo < 1e-14:
            raise NoRoot("lambda_1(d, 0, r) stayed negative down to d = 1e-14")
    return _bisect(f, lo, hi, ROOT_TOL)


def q_star(topo: StreamTopology, d: float, r) -> float:
    """Critical advection rate: the unique root in q of lambda_1(d,q,r)=0.

    Requires lambda_1(d, 0, r) > 0; uniqueness follows from strict
    monotonicity of lambda_1 in q.
    """
    r_vec = _as_profile(topo, r)
    if lambda1(topo, d, 0.0, r_vec) <= 0:
        raise NotPersistentAtZeroAdvection(
            f"lambda_1({d}, 0, r) <= 0: species cannot persist at q = 0")

    def f(q):
        return lambda1(topo, d, q, r_vec)

    hi = float(np.max(r_vec)) + 1.0
    while f(hi) > 0:
        hi *= 2.0
    return _bisect(f, 0.0, hi, ROOT_TOL)


def q_star_derivative(topo: StreamTopology, d: float, profile) -> float:
    """Analytic d-derivative of the critical curve q*(d) for a profile:
    -(sum beta_i D_ij phi_i phi_j) / (sum beta_i Q_ij phi_i phi_j)
    with beta built at q = q*(d) and phi the eigenvector there."""
    qs = q_star(topo, d, profile)
    res = lambda1_result(topo, d, qs, profile)
    phi = res.phi
    beta = geometric_weights(topo, d, qs)
    mats = build_matrices(topo)
    num = float(np.einsum("i,ij,i,j->", beta, mats.D, phi, phi))
    den = float(np.einsum("i,ij,i,j->", beta, mats.Q, phi, phi))
    return -num / den


def _resident_equilibrium(topo, r, p1):
    """u* under H2 (case a) / H2* (case b); raises ResidentNotEstablished."""
    r_vec = _as_profile(topo, r)
    if lambda1(topo, p1.d, p1.q, r_vec) <= EXTINCTION_BAND:
        raise ResidentNotEstablished(
            f"resident (d={p1.d}, q={p1.q}) does not persist: lambda_1 <= 0")
    eq = single_species_equilibrium(topo, p1, r_vec)
    assert eq.status == "Positive"
    return eq.u


def trace_invasion_curve(topo: StreamTopology, r, p1: SpeciesParams,
                         d_grid=None, with_derivative=True,
                         with_lambda1_star=False) -> CriticalCurve:
    """Trace q*_{r-u*}(d) over a d grid, given an established resident.

    Case b restricts the grid to d < d** where the invasion profile
    r - u* still supports persistence at q = 0.
    """
    r_vec = _as_profile(topo, r)
    u_star = _resident_equilibrium(topo, r, p1)
    profile = r_vec - u_star

    if d_grid is None:
        d_grid = np.geomspace(0.01, 20.0, 200)
    d_grid = np.asarray(d_grid, dtype=float)

    if topo.case is BoundaryCase.StreamToOcean:
        cutoff = d_star(topo, profile)
        d_grid = d_grid[d_grid < cutoff - 1e-6]

    samples = []
    for d in d_grid:
        qs = q_star(topo, float(d), profile)
        deriv = q_star_derivative(topo, float(d), profile) if with_derivative else None
        lam_star = None
        if with_lambda1_star:
            lam_star = _lambda1_star_at(topo, r_vec, p1, float(d), qs)
        samples.append(CurveSample(d=float(d), q_star=qs, derivative=deriv,
                                   lambda1_star=lam_star))
    return CriticalCurve(samples=samples, profile_tag="r-u*")


def e1_stability(topo: StreamTopology, r, p1: SpeciesParams,
                 p2: SpeciesParams) -> str:
    """Stability verdict for the resident equilibrium (u*, 0) against the
    invader: the sign of lambda_1(d2, q2, r - u*)."""
    r_vec = _as_profile(topo, r)
    u_star = _resident_equilibrium(topo, r, p1)
    lam = lambda1(topo, p2.d, p2.q, r_vec - u_star)
    if abs(lam) <= MARGINAL_BAND:
        return "Marginal"
    return "Stable" if lam < 0 else "Unstable"


def q2_star(topo: StreamTopology, r, p1: SpeciesParams, d2: float) -> float:
    """Threshold advection rate of the invader at diffusion d2: the root
    in q2 of lambda_1(d1, q1, r - v*(d2, q2)) = 0 (case a).

    The bracket comes from the sandwich q1 < q2* < min{(q1/d1) d2, q*_r(d2)}
    for d2 > d1 (mirrored for d2 < d1); the map is strictly increasing
    in q2.
    """
    if topo.case is not BoundaryCase.StreamToLake:
        raise ValueError("q2_star is defined for case a only")
    r_vec = _as_profile(topo, r)
    _resident_equilibrium(topo, r, p1)  # H2 check
    if abs(d2 - p1.d) < 1e-14:
        return p1.q

    qr_d2 = q_star(topo, d2, r_vec)
    ray = (p1.q / p1.d) * d2
    if d2 > p1.d:
        lo, hi = p1.q, min(ray, qr_d2)
    else:
        lo, hi = ray, min(p1.q, qr_d2)
    eps = 1e-9 * max(1.0, hi)
    lo_in, hi_in = lo + eps, hi - eps

    def g(q2):
        v = single_species_equilibrium(topo, SpeciesParams(d=d2, q=q2), r_vec)
        if v.status != "Positive":
            # past the persistence threshold: the invader equilibrium is
            # gone, so treat as the positive limit lambda_1(d1, q1, r)
            return lambda1(topo, p1.d, p1.q, r_vec)
        return lambda1(topo, p1.d, p1.q, r_vec - v.u)

    g_lo, g_hi = g(lo_in), g(hi_in)
    if g_lo >= 0 or g_hi <= 0:
        raise OutOfRange(
            f"no sign change on the theoretical bracket ({lo}, {hi}) at d2={d2}")
    f_lo, f_hi, a, b = g_lo, g_hi, lo_in, hi_in
    while b - a > ROOT_TOL:
        mid = 0.5 * (a + b)
        f_mid = g(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            b = mid
        else:
            a, f_lo = mid, f_mid
    return 0.5 * (a + b)


def _lambda1_star_at(topo, r_vec, p1, d2, q2_on_curve):
    if q2_on_curve >= q_star(topo, d2, r_vec):
        raise InvaderNotEstablished(
            f"q*_(r-u*)({d2}) >= q*_r({d2}): invader equilibrium v* absent")
    v = single_species_equilibrium(topo, SpeciesParams(d=d2, q=q2_on_curve), r_vec)
    if v.status != "Positive":
        raise InvaderNotEstablished(f"v*({d2}, {q2_on_curve}) does not exist")
    return lambda1(topo, p1.d, p1.q, r_vec - v.u)


def lambda1_star(topo: StreamTopology, r, p1: SpeciesParams, d2: float) -> float:
    """Boundary eigenvalue lambda_1(d1, q1, r - v*(d2, q*_{r-u*}(d2))).

    Its sign orders q2*(d2) against q*_{r-u*}(d2): positive means
    q2* < q*_{r-u*} (coexistence window), negative means the reverse
    (bistability window).
    """
    r_vec = _as_profile(topo, r)
    u_star = _resident_equilibrium(topo, r, p1)
    q2_curve = q_star(topo, d2, r_vec - u_star)
    return _lambda1_star_at(topo, r_vec, p1, d2, q2_curve)


def _region_case_a(d1, q1, d2, q2):
    ray = (d1 / q1) * q2  # the d-value of the ray at height q2
    same = abs(d2 - d1) < 1e-14 and abs(q2 - q1) < 1e-14
    if same:
        return None
    if 0 < d2 <= ray and q2 >= q1:
        return RegionLabel.G1
    if d2 >= ray and 0 < q2 <= q1:
        return RegionLabel.G2
    return None


def _region_case_b(d1, q1, d2, q2):
    ray = (d1 / q1) * q2
    same = abs(d2 - d1) < 1e-14 and abs(q2 - q1) < 1e-14
    if same:
        return None
    if d1 < d2 <= ray:
        return RegionLabel.G1star
    if ray <= d2 <= d1 and q2 > 0:
        return RegionLabel.G2star
    return None


def classify_point(topo: StreamTopology, r, p1: SpeciesParams,
                   p2: SpeciesParams) -> InvasionReport:
    """Region label, stability verdicts, and predicted outcome for an
    invader at (d2, q2) against an established resident at (d1, q1)."""
    r_vec = _as_profile(topo, r)
    u_star = _resident_equilibrium(topo, r, p1)
    profile = r_vec - u_star
    case_b = topo.case is BoundaryCase.StreamToOcean

    lam_e1 = lambda1(topo, p2.d, p2.q, profile)
    if abs(lam_e1) <= MARGINAL_BAND:
        e1 = "Marginal"
    else:
        e1 = "Stable" if lam_e1 < 0 else "Unstable"

    lam_v = lambda1(topo, p2.d, p2.q, r_vec)
    if lam_v <= EXTINCTION_BAND:
        e2 = "NotExists"
    else:
        v = single_species_equilibrium(topo, p2, r_vec)
        lam_e2 = lambda1(topo, p1.d, p1.q, r_vec - v.u)
        if abs(lam_e2) <= MARGINAL_BAND:
            e2 = "Marginal"
        else:
            e2 = "Stable" if lam_e2 < 0 else "Unstable"

    if case_b:
        region = _region_case_b(p1.d, p1.q, p2.d, p2.q)
    else:
        region = _region_case_a(p1.d, p1.q, p2.d, p2.q)

    if region is None:
        # distance to the invasion curve decides Boundary vs S-side
        on_curve = False
        try:
            if case_b:
                cutoff = d_star(topo, profile)
                in_range = p2.d < cutoff
            else:
                in_range = True
            if in_range:
                q_curve = q_star(topo, p2.d, profile)
                on_curve = abs(p2.q - q_curve) <= BOUNDARY_BAND
        except (NoRoot, NotPersistentAtZeroAdvection):
            in_range = False
        if on_curve or e1 == "Marginal":
            region = RegionLabel.Boundary
        elif e1 == "Stable":
            region = RegionLabel.S1star if case_b else RegionLabel.S1only
        else:
            region = RegionLabel.S2star if case_b else RegionLabel.S2only

    if region in (RegionLabel.G1, RegionLabel.G1star):
        predicted = "E1GloballyStable"
    elif region in (RegionLabel.G2, RegionLabel.G2star):
        predicted = "E2GloballyStable"
    elif region is RegionLabel.Boundary or "Marginal" in (e1, e2):
        predicted = "Undetermined"
    elif e1 == "Unstable" and e2 == "Unstable":
        predicted = "Coexist"
    elif e1 == "Stable" and e2 == "Stable":
        predicted = "Bistable"
    elif e1 == "Stable":
        predicted = "E1GloballyStable"
    else:
        predicted = "E2GloballyStable"

    return InvasionReport(region=region, e1_stable=e1, e2_stable=e2,
                          predicted=predicted)
