import math
import warnings

import numpy as np
import pytest

from dirac_edge import analytic, flow, lattice
from dirac_edge.params import BoundaryParam, PhysParams
from dirac_edge.potentials import PerturbationSpec, bump_profile, random_perturbation


def bparam(zeta):
    return BoundaryParam.from_zeta(zeta)


def analytic_flow(m, zeta, **kw):
    p = PhysParams(m=m)
    branches = flow.sweep_dispersion(p, bparam(zeta), source="analytic", **kw)
    return flow.spectral_flow(branches, lipschitz=p.hbar * p.c)


def test_sweep_examples():
    p = PhysParams(m=1.0)
    branches = flow.sweep_dispersion(p, bparam(1.0), k_range=(-3, 3), source="analytic")
    assert len(branches) == 1
    br = branches[0]
    assert np.allclose(br.energy, br.k2)  # E = k2 at zeta = 1
    assert np.array_equal(br.in_gap, np.abs(br.k2) < 1.0)

    branches = flow.sweep_dispersion(p, bparam(0.0), source="analytic")
    assert len(branches) == 1
    br = branches[0]
    assert np.all(br.k2 < 0.0)
    assert np.allclose(br.energy, 1.0)
    assert not np.any(br.in_gap)  # flat branch pinned to the gap edge


def test_flow_values_match_conductivity():
    grid_zeta = [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0, math.inf]
    for m in (-2.0, -1.0, 1.0, 2.0):
        for zeta in grid_zeta:
            res = analytic_flow(m, zeta)
            expected = analytic.sigma_edge_analytic(PhysParams(m=m), bparam(zeta))
            assert res.flow == expected, (m, zeta)
            assert res.flow == sum(d for _, d in res.crossings)


def test_crossing_location_refined():
    res = analytic_flow(1.0, 1.0)
    assert len(res.crossings) == 1
    k_star, direction = res.crossings[0]
    assert direction == 1
    assert k_star == pytest.approx(0.0, abs=1e-9)

    res = analytic_flow(1.0, 2.0, n_samples=193)
    (k_star, direction), = res.crossings
    # E_g = 0 at k = -(1 - zeta^2) m c / (2 zeta hbar) = 3/4... with zeta=2: 3/4
    assert k_star == pytest.approx(0.75, abs=1e-9)
    assert direction == 1


def test_reference_independence():
    for ref in (-0.8, -0.3, 0.0, 0.4, 0.85):
        p = PhysParams(m=1.0)
        branches = flow.sweep_dispersion(p, bparam(2.0), source="analytic")
        res = flow.spectral_flow(branches, reference_energy=ref, lipschitz=1.0)
        assert res.flow == 1


def test_reference_nudge_on_exact_sample():
    p = PhysParams(m=1.0)
    branches = flow.sweep_dispersion(p, bparam(1.0), k_range=(-2, 2), n_samples=41)
    assert any(np.any(br.energy == 0.0) for br in branches)
    res = flow.spectral_flow(branches, reference_energy=0.0, lipschitz=1.0)
    assert res.reference_energy != 0.0
    assert res.flow == 1


def test_narrow_range_warns():
    p = PhysParams(m=1.0)
    with pytest.warns(UserWarning, match="k-range"):
        flow.sweep_dispersion(p, bparam(1.0), k_range=(-0.5, 0.5), source="analytic")


def test_tracking_failure_aborts():
    br = flow.DispersionBranch(
        k2=np.array([0.0, 0.1, 0.2]),
        energy=np.array([-0.2, 0.0, 0.1]),
        source="analytic",
        in_gap=np.array([True, True, True]),
        cap_lo=np.full(3, -1.0),
        cap_hi=np.full(3, 1.0),
    )
    wide = flow.DispersionBranch(
        k2=np.array([-1.0, 1.0]),
        energy=np.array([-0.9, 0.9]),
        source="analytic",
        in_gap=np.array([True, True]),
        cap_lo=np.full(2, -1.0),
        cap_hi=np.full(2, 1.0),
    )
    with pytest.raises(flow.BranchTrackingError):
        flow.spectral_flow([wide, br], lipschitz=1.0)


def test_tangency_counts_zero():
    # touch the reference without crossing: net flow 0
    k = np.linspace(-1, 1, 21)
    e = 0.3 + (k - 0.000001) ** 2  # strictly above ref=0.3... shifted to avoid exact hit
    br = flow.DispersionBranch(
        k2=k, energy=e, source="analytic", in_gap=np.ones_like(k, bool),
        cap_lo=np.full_like(k, -1.0), cap_hi=np.full_like(k, 1.0),
    )
    res = flow.spectral_flow([br], reference_energy=0.3, lipschitz=1.0)
    assert res.flow == 0


def test_source_independence_shooting_and_discrete():
    p = PhysParams(m=1.0)
    grid = lattice.Grid1D(spacing=0.015, n_sites=2200)
    for zeta in (1.0, 2.0, -0.5):
        bc = bparam(zeta)
        expected = analytic.sigma_edge_analytic(p, bc)
        fa = flow.spectral_flow(
            flow.sweep_dispersion(p, bc, n_samples=49, source="analytic"), lipschitz=1.0
        ).flow
        fs = flow.spectral_flow(
            flow.sweep_dispersion(p, bc, n_samples=49, source="shooting"), lipschitz=1.0
        ).flow
        fd = flow.spectral_flow(
            flow.sweep_dispersion(p, bc, n_samples=49, source="discrete", grid=grid),
            lipschitz=1.0,
        ).flow
        assert fa == fs == fd == expected, zeta


def test_shooting_matches_analytic_pointwise():
    p = PhysParams(m=1.0)
    bc = bparam(2.0)
    brs_sh = flow.sweep_dispersion(p, bc, n_samples=65, source="shooting")
    brs_an = flow.sweep_dispersion(p, bc, n_samples=65, source="analytic")
    assert len(brs_sh) == 1 and len(brs_an) == 1
    sh, an = brs_sh[0], brs_an[0]
    common, i_sh, i_an = np.intersect1d(sh.k2, an.k2, return_indices=True)
    assert common.size > 30
    assert np.max(np.abs(sh.energy[i_sh] - an.energy[i_an])) < 1e-7


def test_branch_lipschitz_bound():
    p = PhysParams(m=1.0)
    for zeta in (0.5, 1.0, 3.0):
        for br in flow.sweep_dispersion(p, bparam(zeta), source="analytic"):
            if len(br.k2) > 1:
                slopes = np.abs(np.diff(br.energy) / np.diff(br.k2))
                assert np.max(slopes) <= 2.0 * p.hbar * p.c + 1e-9


def test_stability_scan():
    p = PhysParams(m=1.0)
    bc = bparam(1.0)
    w_small = PerturbationSpec.from_profiles(
        v=bump_profile(1.0, 0.9, 0.5), support_cutoff=2.0
    )
    w_zero = PerturbationSpec.from_profiles(support_cutoff=1.0)
    rng = np.random.default_rng(5)
    w_big = random_perturbation(rng, target_norm=2.5, support_cutoff=2.5)
    records = flow.stability_scan(p, bc, [w_small, w_zero, w_big], n_samples=65)
    assert records[0].flow == 1 and records[0].unchanged and records[0].within_hypothesis
    assert records[1].flow == 1 and records[1].unchanged
    assert not records[2].within_hypothesis  # outside the hypothesis: recorded, not asserted
