import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac_edge.params import (
    BoundaryParam,
    EnergyWindow,
    PhysParams,
    Spinor2,
    SwitchFunction,
    SwitchProfile,
    boundary_residual,
    z_from_zeta,
    zeta_from_z,
)


def test_phys_params_validation():
    with pytest.raises(ValueError):
        PhysParams(m=1.0, hbar=0.0)
    with pytest.raises(ValueError):
        PhysParams(m=math.nan)
    p = PhysParams(m=-2.0)
    assert p.gap_halfwidth == 2.0
    assert p.mc2 == -2.0
    with pytest.raises(ValueError):
        PhysParams(m=0.0).require_mass()


def test_zeta_from_z_known_values():
    assert zeta_from_z(-1.0 + 0j) == pytest.approx(0.0, abs=1e-15)
    assert zeta_from_z(1j) == pytest.approx(1.0, abs=1e-12)
    assert zeta_from_z(1.0 + 0j) == math.inf


def test_z_from_zeta_known_values():
    assert z_from_zeta(0.0) == pytest.approx(-1.0)
    assert abs(z_from_zeta(1.0) - 1j) < 1e-15
    assert z_from_zeta(math.inf) == 1.0


def test_zeta_from_z_rejects_off_circle():
    with pytest.raises(ValueError):
        zeta_from_z(1.2 + 0j)


@given(st.floats(min_value=-math.pi, max_value=math.pi, exclude_min=True))
@settings(max_examples=200, deadline=None)
def test_circle_round_trip(phi):
    z = cmath.exp(1j * phi)
    zeta = zeta_from_z(z)
    assert abs(z_from_zeta(zeta) - z) < 1e-10


def test_circle_round_trip_thousand_points():
    rng = np.random.default_rng(7)
    phis = rng.uniform(-math.pi, math.pi, size=1000)
    worst = 0.0
    for phi in phis:
        z = cmath.exp(1j * phi)
        worst = max(worst, abs(z_from_zeta(zeta_from_z(z)) - z))
    assert worst < 1e-10


@given(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_zeta_round_trip(zeta):
    back = zeta_from_z(z_from_zeta(zeta))
    assert back == pytest.approx(zeta, abs=1e-12, rel=1e-12)


def test_boundary_param_consistency():
    bc = BoundaryParam.from_zeta(2.0)
    assert abs(abs(bc.z) - 1.0) < 1e-12
    assert BoundaryParam.from_z(bc.z).zeta == pytest.approx(2.0, rel=1e-12)
    assert BoundaryParam.from_zeta(-math.inf).zeta == math.inf
    with pytest.raises(ValueError):
        BoundaryParam(zeta=1.0, z=1j * 0.9)


def test_boundary_residual_examples():
    assert boundary_residual(Spinor2(1.0, 1j), BoundaryParam.from_zeta(1.0)) == 0.0
    assert boundary_residual(Spinor2(0.0, 1.0), BoundaryParam.from_zeta(math.inf)) == 0.0
    r = boundary_residual(Spinor2(1.0, 0.0), BoundaryParam.from_zeta(1.0))
    assert r == pytest.approx(1.0 / math.sqrt(2.0))
    with pytest.raises(ValueError):
        boundary_residual(Spinor2(0.0, 0.0), BoundaryParam.from_zeta(1.0))


@given(
    st.floats(min_value=-50.0, max_value=50.0),
    st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False),
)
@settings(max_examples=200, deadline=None)
def test_admissible_spinors_carry_no_normal_current(zeta, v):
    # w = i zeta v makes <sigma1> vanish identically: no current into the wall.
    w = 1j * zeta * v
    s = Spinor2(v, w)
    if s.norm() == 0.0:
        return
    assert abs(s.normal_current()) <= 1e-12 * s.norm() ** 2
    assert boundary_residual(s, BoundaryParam.from_zeta(zeta)) < 1e-14


def test_energy_window():
    with pytest.raises(ValueError):
        EnergyWindow(1.0, 1.0)
    w = EnergyWindow(-0.5, 0.5)
    assert w.width == 1.0
    assert w.contains(0.0) and not w.contains(0.5)
    w.require_inside_gap(PhysParams(m=1.0))
    with pytest.raises(ValueError):
        EnergyWindow(-1.0, 0.5).require_inside_gap(PhysParams(m=1.0))


@pytest.mark.parametrize("profile", list(SwitchProfile))
def test_switch_function_shape(profile):
    g = SwitchFunction(profile, EnergyWindow(-0.5, 0.5))
    assert g(-0.5) == 0.0 and g(-2.0) == 0.0
    assert g(0.5) == 1.0 and g(2.0) == 1.0
    es = np.linspace(-1.0, 1.0, 801)
    vals = g(es)
    assert np.all(np.diff(vals) >= -1e-15)
    dv = g.derivative(es)
    assert np.all(dv >= 0.0)
    assert np.all(dv[(es <= -0.5) | (es >= 0.5)] == 0.0)
    # derivative integrates to ~1 across the window
    total = np.trapezoid(g.derivative(np.linspace(-0.5, 0.5, 4001)), dx=1.0 / 4000.0)
    assert total == pytest.approx(1.0, abs=1e-4)
