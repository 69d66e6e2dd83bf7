import math

import numpy as np
import pytest

from dirac_edge import analytic, shooting
from dirac_edge.params import BoundaryParam, EnergyWindow, PhysParams
from dirac_edge.potentials import PerturbationSpec, bump_profile


def bparam(zeta):
    return BoundaryParam.from_zeta(zeta)


def random_admissible(rng):
    """(p, bc, k2) with a gap state comfortably inside the gap (kappa >= 0.6|m|)."""
    m = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
    zeta = math.copysign(math.exp(rng.uniform(math.log(0.3), math.log(3.0))), m)
    e_target = rng.uniform(-0.8, 0.8) * abs(m)
    k2 = ((1.0 + zeta**2) * e_target - (1.0 - zeta**2) * m) / (2.0 * zeta)
    return PhysParams(m=m), bparam(zeta), k2


def test_integrate_decaying_matches_analytic_spinors():
    p = PhysParams(m=1.0)
    s = shooting.integrate_decaying(0.0, 0.0, p)
    assert abs(s.w / s.v - 1j) < 1e-8
    s = shooting.integrate_decaying(1.0, -1.0, p)
    assert abs(s.w) < 1e-8
    # gauge form: v real, w purely imaginary, unit norm
    assert s.v.imag == 0.0 and s.w.real == 0.0
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_integrate_decaying_rejections():
    p = PhysParams(m=1.0)
    with pytest.raises(ValueError):
        shooting.integrate_decaying(2.0, 0.0, p)  # outside fiber gap: no decay
    with pytest.raises(ValueError):
        shooting.integrate_decaying(0.0, 0.0, p, step=0.2)  # kappa*step too big
    with pytest.raises(ValueError):
        shooting.integrate_decaying(0.0, 0.0, p, x_max=5.0)  # tail not decayed


def test_boundary_ratio_matches_tail_eigenvector():
    # Constant coefficients: the inward sweep must preserve the decaying ray.
    p = PhysParams(m=1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        k2 = rng.uniform(-2.0, 2.0)
        e = rng.uniform(-0.9, 0.9) * analytic.bulk_edge(k2, p)
        kappa = analytic.kappa_of(k2, e, p)
        f = shooting.boundary_ratio(e, k2, p)
        exact = (kappa + k2) / (1.0 + e) if abs(1.0 + e) > 1e-12 else math.inf
        assert f == pytest.approx(exact, rel=1e-10, abs=1e-10)


def test_match_examples():
    p = PhysParams(m=1.0)
    m = shooting.match_boundary(0.3, p, bparam(1.0), window=EnergyWindow(-0.9, 0.9))
    assert m is not None and m.energy == pytest.approx(0.3, abs=1e-8)
    assert abs(m.residual) < 1e-9

    assert shooting.match_boundary(0.0, PhysParams(m=-1.0), bparam(1.0), window=(-0.9, 0.9)) is None

    w = PerturbationSpec.from_profiles(
        v=lambda x: 0.3 * np.maximum(0.0, 1.0 - np.asarray(x, float)), support_cutoff=1.0
    )
    mp = shooting.match_boundary(0.0, p, bparam(1.0), w=w, window=(-0.9, 0.9))
    assert mp is not None and abs(mp.energy) <= 0.3
    # stable under step halving (the potential has a kink, so only ~h^2 here)
    mp2 = shooting.match_boundary(0.0, p, bparam(1.0), w=w, window=(-0.9, 0.9), step=0.005)
    assert mp.energy == pytest.approx(mp2.energy, abs=1e-6)


def test_match_zeta_infinite_swapped_ratio():
    p = PhysParams(m=1.0)
    # the only zeta=inf fiber eigenvalue sits at E = -mc2, inside the fiber
    # gap for k2 > 0; a window stopping short of it finds nothing
    assert shooting.match_boundary_all(0.5, p, bparam(math.inf), window=(-0.95, 0.95)) == []
    roots = shooting.match_boundary_all(0.5, p, bparam(math.inf), window=(-1.05, 0.95))
    assert len(roots) == 1
    assert roots[0].energy == pytest.approx(-1.0, abs=1e-8)


def test_oracle_equivalence_sample():
    rng = np.random.default_rng(42)
    for _ in range(25):
        p, bc, k2 = random_admissible(rng)
        e_gap = analytic.gap_eigenvalue(k2, p, bc).e_gap
        half = p.gap_halfwidth
        m = shooting.match_boundary(k2, p, bc, window=(-0.9 * half, 0.9 * half))
        assert m is not None
        assert m.energy == pytest.approx(e_gap, abs=1e-7)
        state = shooting.numeric_gap_state(m, k2, p, bc)
        exact = analytic.gap_state(k2, p, bc)
        overlap = abs(
            np.vdot(state.spinor.as_array(), exact.spinor.as_array())
        ) / (state.spinor.norm() * exact.spinor.norm())
        assert overlap > 1.0 - 1e-8


def test_numeric_gap_state_examples():
    p = PhysParams(m=1.0)
    m = shooting.match_boundary(0.0, p, bparam(1.0), window=(-0.9, 0.9))
    state = shooting.numeric_gap_state(m, 0.0, p, bparam(1.0))
    assert state.kappa == pytest.approx(1.0, abs=1e-3)
    assert shooting.sigma2_expectation(m.energy, 0.0, p) == pytest.approx(1.0, abs=1e-6)

    bc2 = bparam(2.0)
    m2 = shooting.match_boundary(1.0, p, bc2, window=(-0.9, 0.9))
    assert m2.energy == pytest.approx(0.2, abs=1e-8)


def test_boundary_current_vanishes():
    # Re(conj(v) w)(0) = 0 for every matched state
    p = PhysParams(m=1.0)
    for zeta, k2 in [(1.0, 0.4), (2.0, 1.0), (0.5, -0.3)]:
        m = shooting.match_boundary(k2, p, bparam(zeta), window=(-0.9, 0.9))
        state = shooting.numeric_gap_state(m, k2, p, bparam(zeta))
        assert abs(state.spinor.normal_current()) < 1e-9


def test_hellmann_feynman_with_perturbation():
    p = PhysParams(m=1.0)
    bc = bparam(1.0)
    w = PerturbationSpec.from_profiles(
        v=bump_profile(1.0, 0.9, 0.25), m1=bump_profile(1.2, 0.8, -0.2), support_cutoff=2.2
    )
    delta = 1e-3
    k2 = 0.3
    es = []
    for kk in (k2 - delta, k2, k2 + delta):
        m = shooting.match_boundary(kk, p, bc, w=w, window=(-0.85, 0.85))
        es.append(m.energy)
    fd = (es[2] - es[0]) / (2.0 * delta)
    sigma2 = shooting.sigma2_expectation(es[1], k2, p, w=w)
    assert fd == pytest.approx(sigma2, abs=1e-4)


def test_step_halving_is_fourth_order():
    # perturbed problem (constant coefficients are integrated exactly by RK4)
    p = PhysParams(m=1.0)
    bc = bparam(1.0)
    big_x = 2.0

    def vprof(x):
        x = np.asarray(x, float)
        t = np.clip(4.0 * x * (big_x - x) / big_x**2, 0.0, None)
        return 0.5 * t**5  # C^4 at the support edges

    w = PerturbationSpec.from_profiles(v=vprof, support_cutoff=big_x)
    ref = shooting.match_boundary(
        0.2, p, bc, w=w, window=(-0.8, 0.8), step=0.00125, xtol=1e-14
    ).energy
    errs = []
    for h in (0.04, 0.02, 0.01):
        m = shooting.match_boundary(0.2, p, bc, w=w, window=(-0.8, 0.8), step=h, xtol=1e-14)
        errs.append(abs(m.energy - ref))
    for i in range(len(errs) - 1):
        ratio = errs[i] / errs[i + 1]
        assert 16.0 * 0.7 <= ratio <= 16.0 * 1.3


def test_multiple_roots_are_all_returned():
    # a deep wide well splits off several bound branches inside the gap
    p = PhysParams(m=1.0)
    bc = bparam(1.0)
    w = PerturbationSpec.from_profiles(v=bump_profile(2.0, 1.8, -0.9), support_cutoff=4.0)
    roots = shooting.match_boundary_all(0.0, p, bc, w=w, window=(-0.9, 0.9))
    assert len(roots) >= 1
    energies = [r.energy for r in roots]
    assert energies == sorted(energies)
    for r in roots:
        assert abs(r.residual) < 1e-9
