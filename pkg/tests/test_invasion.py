"""Critical curves, thresholds, and invasion region classification."""

import numpy as np
import pytest

from driftlab.topology import BoundaryCase, StreamTopology
from driftlab.spectral import lambda1
from driftlab.equilibrium import SpeciesParams, single_species_equilibrium
from driftlab.invasion import (
    NOT_APPLICABLE,
    NotPersistentAtZeroAdvection,
    RegionLabel,
    classify_point,
    d_star,
    e1_stability,
    lambda1_star,
    q2_star,
    q_star,
    q_star_derivative,
    trace_invasion_curve,
)

A2 = StreamTopology(2, BoundaryCase.StreamToLake)
B2 = StreamTopology(2, BoundaryCase.StreamToOcean)
A4 = StreamTopology(4, BoundaryCase.StreamToLake)
B4 = StreamTopology(4, BoundaryCase.StreamToOcean)
P1 = SpeciesParams(1.0, 0.5)


def test_critical_advection_is_a_root():
    qs = q_star(A4, 1.0, 2.0)
    assert abs(lambda1(A4, 1.0, qs, 2.0)) < 1e-9
    assert lambda1(A4, 1.0, qs - 0.01, 2.0) > 0 > lambda1(A4, 1.0, qs + 0.01, 2.0)


def test_critical_advection_requires_persistence_at_zero_q():
    with pytest.raises(NotPersistentAtZeroAdvection):
        q_star(A4, 1.0, -1.0)


def test_diffusion_cutoff_two_patch_closed_form():
    # n=2, ocean case, r=2: the cutoff solves lambda_1(d, 0, 2) = 0
    assert d_star(B2, 2.0) == pytest.approx(3.0 + np.sqrt(5.0), abs=1e-8)


def test_diffusion_cutoff_not_applicable_in_lake_case():
    assert d_star(A4, 2.0) is NOT_APPLICABLE


def test_curve_derivative_matches_finite_difference():
    for topo, d in [(A4, 0.8), (B4, 0.6)]:
        h = 1e-5
        fd = (q_star(topo, d + h, 2.0) - q_star(topo, d - h, 2.0)) / (2 * h)
        assert q_star_derivative(topo, d, 2.0) == pytest.approx(fd, rel=1e-4)


def test_invasion_curve_passes_through_resident():
    curve = trace_invasion_curve(A4, 2.0, P1, d_grid=[0.5, 1.0, 2.0])
    sample = curve.samples[1]
    assert sample.d == 1.0
    assert sample.q_star == pytest.approx(0.5, abs=1e-8)
    assert curve.profile_tag == "r-u*"


def test_invasion_curve_clamped_below_cutoff_in_ocean_case():
    curve = trace_invasion_curve(B4, 2.0, P1, d_grid=np.linspace(0.1, 50.0, 40))
    eq = single_species_equilibrium(B4, P1, 2.0)
    cutoff = d_star(B4, 2.0 - eq.u)
    assert all(s.d < cutoff for s in curve.samples)
    assert len(curve.samples) < 40


def test_resident_stability_flips_across_invasion_curve():
    eq = single_species_equilibrium(A4, P1, 2.0)
    qc = q_star(A4, 0.3, 2.0 - eq.u)
    assert e1_stability(A4, 2.0, P1, SpeciesParams(0.3, qc + 0.01)) == "Stable"
    assert e1_stability(A4, 2.0, P1, SpeciesParams(0.3, qc - 0.01)) == "Unstable"


def test_invader_threshold_consistency():
    # at q2 = q2*(d2), the resident is marginal against the invader's
    # semi-trivial equilibrium
    d2 = 2.0
    q2c = q2_star(A4, 2.0, P1, d2)
    v = single_species_equilibrium(A4, SpeciesParams(d2, q2c), 2.0)
    assert abs(lambda1(A4, P1.d, P1.q, 2.0 - v.u)) < 1e-8
    # sandwich between the proportional ray and the resident's advection
    assert P1.q < q2c < (P1.q / P1.d) * d2


def test_invader_threshold_at_resident_is_resident_advection():
    assert q2_star(A4, 2.0, P1, 1.0) == pytest.approx(0.5)


def test_invader_threshold_rejects_ocean_case():
    with pytest.raises(ValueError):
        q2_star(B4, 2.0, P1, 2.0)


def test_boundary_eigenvalue_sign_examples():
    assert lambda1_star(A4, 2.0, P1, 2.0) < 0
    assert lambda1_star(B4, 2.0, P1, 0.5) > 0


def test_classify_global_regions():
    rep = classify_point(A4, 2.0, P1, SpeciesParams(1.0, 0.6))
    assert rep.region is RegionLabel.G1
    assert rep.predicted == "E1GloballyStable"
    rep = classify_point(A4, 2.0, P1, SpeciesParams(2.0, 0.5))
    assert rep.region is RegionLabel.G2
    assert rep.predicted == "E2GloballyStable"
    rep = classify_point(B4, 2.0, P1, SpeciesParams(1.5, 1.2))
    assert rep.region is RegionLabel.G1star
    rep = classify_point(B4, 2.0, P1, SpeciesParams(0.5, 0.2))
    assert rep.region is RegionLabel.G2star


def test_classify_bistable_and_coexist_scenarios():
    rep = classify_point(A4, 2.0, P1, SpeciesParams(0.08, 0.44))
    assert (rep.e1_stable, rep.e2_stable) == ("Stable", "Stable")
    assert rep.predicted == "Bistable"
    rep = classify_point(B4, 2.0, P1, SpeciesParams(0.05, 0.555))
    assert (rep.e1_stable, rep.e2_stable) == ("Unstable", "Unstable")
    assert rep.predicted == "Coexist"


def test_classify_on_curve_is_boundary():
    eq = single_species_equilibrium(A4, P1, 2.0)
    qc = q_star(A4, 0.3, 2.0 - eq.u)
    rep = classify_point(A4, 2.0, P1, SpeciesParams(0.3, qc))
    assert rep.region is RegionLabel.Boundary
    assert rep.predicted == "Undetermined"
