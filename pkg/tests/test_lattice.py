import math

import numpy as np
import pytest
import scipy.linalg

from dirac_edge import analytic, lattice, shooting
from dirac_edge.params import BoundaryParam, PhysParams
from dirac_edge.potentials import PerturbationSpec, bump_profile


def bparam(zeta):
    return BoundaryParam.from_zeta(zeta)


GRID = lattice.Grid1D(spacing=0.01, n_sites=3000)


def test_grid_validation():
    with pytest.raises(ValueError):
        lattice.Grid1D(spacing=0.0, n_sites=100)
    with pytest.raises(ValueError):
        lattice.Grid1D(spacing=0.01, n_sites=8)
    g = lattice.Grid1D.for_decay(kappa_min=1.0, spacing=0.01)
    assert g.x_max >= 25.0
    with pytest.raises(ValueError):
        lattice.assemble_fiber(0.0, PhysParams(m=30.0), bparam(1.0), grid=GRID)


def test_zeta_inf_requires_zero_wilson():
    with pytest.raises(ValueError):
        lattice.assemble_fiber(0.5, PhysParams(m=1.0), bparam(math.inf), grid=GRID)
    fm = lattice.assemble_fiber(
        0.5, PhysParams(m=1.0), bparam(math.inf), grid=GRID, wilson_r=0.0
    )
    assert fm.hermiticity_defect() < 1e-13


@pytest.mark.parametrize(
    "m,zeta,k2",
    [(1.0, 1.0, 0.0), (1.0, 2.0, 1.0), (1.0, 0.0, -1.0), (-1.0, -0.5, 0.7), (1.0, -1.0, 0.4)],
)
def test_hermiticity_exact(m, zeta, k2):
    w = PerturbationSpec.from_profiles(
        v=bump_profile(1.0, 0.8, 0.2), m1=bump_profile(0.8, 0.6, -0.15), support_cutoff=2.0
    )
    fm = lattice.assemble_fiber(k2, PhysParams(m=m), bparam(zeta), w=w, grid=GRID)
    assert fm.hermiticity_defect() < 1e-13


def test_banded_conversion_matches_dense():
    g = lattice.Grid1D(spacing=0.05, n_sites=40)
    fm = lattice.assemble_fiber(0.3, PhysParams(m=1.0), bparam(2.0), grid=g)
    dense = fm.to_dense()
    ab = fm.to_banded()
    vals_banded = scipy.linalg.eigvals_banded(ab, lower=False)
    vals_dense = np.linalg.eigvalsh(dense)
    assert np.max(np.abs(np.sort(vals_banded) - np.sort(vals_dense))) < 1e-10


@pytest.mark.parametrize(
    "m,zeta,k2,expected,window",
    [
        (1.0, 1.0, 0.0, 0.0, (-0.9, 0.9)),
        (1.0, 1.0, 0.5, 0.5, (-0.9, 0.9)),
        (1.0, 0.0, -1.0, 1.0, (-0.9, 1.05)),
        (1.0, 2.0, -0.2, -0.76, (-0.95, 0.95)),
        (-1.0, -2.0, -0.3, 0.84, (-0.95, 0.95)),
    ],
)
def test_in_gap_eigenvalue_matches_oracle(m, zeta, k2, expected, window):
    fm = lattice.assemble_fiber(k2, PhysParams(m=m), bparam(zeta), grid=GRID)
    pairs = lattice.eig_in_gap(fm, window)
    assert len(pairs) == 1
    assert pairs[0][0] == pytest.approx(expected, abs=5e-3)


@pytest.mark.parametrize(
    "m,zeta,k2",
    [(1.0, -1.0, 0.5), (1.0, -2.0, 0.3), (1.0, 1.0, -3.0), (-1.0, 1.0, 0.2), (1.0, 0.0, 0.5)],
)
def test_no_state_when_condition_fails(m, zeta, k2):
    # also covers the deflated single-site artifact at zeta = -wilson_r
    fm = lattice.assemble_fiber(k2, PhysParams(m=m), bparam(zeta), grid=GRID)
    assert lattice.eig_in_gap(fm, (-0.95, 0.95)) == []


def test_deflation_keeps_physical_state():
    fm = lattice.assemble_fiber(0.5, PhysParams(m=-1.0), bparam(-1.0), grid=GRID)
    assert fm.deflated
    pairs = lattice.eig_in_gap(fm, (-0.95, 0.95))
    assert len(pairs) == 1
    assert pairs[0][0] == pytest.approx(-0.5, abs=5e-3)


def test_boundary_condition_after_unelimination():
    from dirac_edge.params import Spinor2, boundary_residual

    for m, zeta, k2 in [(1.0, 1.0, 0.3), (1.0, 2.0, 1.0), (1.0, 0.5, 0.0)]:
        bc = bparam(zeta)
        fm = lattice.assemble_fiber(k2, PhysParams(m=m), bc, grid=GRID)
        (e, psi), = lattice.eig_in_gap(fm, (-0.9, 0.9))
        s = Spinor2(complex(psi[0, 0]), complex(psi[0, 1]))
        if s.norm() > 1e-12:
            assert boundary_residual(s, bc) < 1e-6


def test_wall_states_are_filtered():
    # for m r < 0 the hard wall binds its own in-gap branch; the tail filter
    # must drop it while no boundary state exists (m zeta < 0 here)
    fm = lattice.assemble_fiber(0.5, PhysParams(m=-1.0), bparam(1.0), grid=GRID)
    kept = lattice.eig_in_gap(fm, (-0.95, 0.95))
    assert kept == []
    vals = scipy.linalg.eigvals_banded(
        fm.to_banded(), lower=False, select="v", select_range=(-0.95, 0.95)
    )
    assert vals.size >= 1  # raw spectrum does contain the wall mode


def test_convergence_is_first_order():
    # Wilson bias dominates: the error halves when h halves
    ratios = []
    for m, zeta, k2 in [(1.0, 2.0, 1.0), (1.0, 0.5, 0.0), (1.0, 0.0, -1.0)]:
        p = PhysParams(m=m)
        bc = bparam(zeta)
        e_gap = analytic.gap_eigenvalue(k2, p, bc).e_gap
        errs = []
        for h, n in ((0.02, 1500), (0.01, 3000)):
            fm = lattice.assemble_fiber(k2, p, bc, grid=lattice.Grid1D(h, n))
            pairs = lattice.eig_in_gap(fm, (e_gap - 0.12, e_gap + 0.12))
            assert len(pairs) == 1
            errs.append(abs(pairs[0][0] - e_gap))
        ratios.append(errs[0] / errs[1])
    assert all(1.7 <= r <= 2.3 for r in ratios)


def test_agreement_with_shooting_including_perturbation():
    rng = np.random.default_rng(11)
    w = PerturbationSpec.from_profiles(
        v=bump_profile(1.2, 1.0, 0.3), m1=bump_profile(0.9, 0.7, -0.2), support_cutoff=2.4
    )
    for _ in range(6):
        zeta = rng.uniform(0.4, 2.5)
        k2 = rng.uniform(-0.5, 0.8)
        p = PhysParams(m=1.0)
        bc = bparam(zeta)
        match = shooting.match_boundary(k2, p, bc, w=w, window=(-0.85, 0.85))
        fm = lattice.assemble_fiber(k2, p, bc, w=w, grid=GRID)
        pairs = lattice.eig_in_gap(fm, (-0.9, 0.9))
        if match is None:
            assert pairs == []
            continue
        assert pairs, f"lattice missed the state at zeta={zeta}, k2={k2}"
        best = min(pairs, key=lambda t: abs(t[0] - match.energy))
        assert best[0] == pytest.approx(match.energy, abs=7e-3)
