"""Model parameters, boundary conditions and energy windows.

The system is a two-component Dirac Hamiltonian on the half-plane x1 >= 0,
homogeneous in x2.  After Fourier transform in x2 it decomposes into
half-line fiber Hamiltonians

    H(k2) = -i hbar c sigma1 d/dx1 + hbar c k2 sigma2 + m c^2 sigma3,

self-adjoint on spinors (v, w) obeying w(0) = i zeta v(0) for an
extended-real parameter zeta; zeta = inf denotes the v(0) = 0 condition.
Equivalently the condition is labeled by a unit-modulus complex z with
(1 + z)/(1 - z) = i zeta, z = 1 corresponding to zeta = inf.  Natural
units hbar = c = e = 1 are the defaults, but every formula in the package
carries the constants so scaled unit systems work too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "PhysParams",
    "BoundaryParam",
    "EnergyWindow",
    "SwitchFunction",
    "SwitchProfile",
    "Spinor2",
    "zeta_from_z",
    "z_from_zeta",
    "boundary_residual",
]

_UNIT_CIRCLE_TOL = 1e-9


@dataclass(frozen=True)
class PhysParams:
    """Fermion mass and unit constants.

    m is measured in energy/c^2 units and its sign is meaningful: the bulk
    spectral gap is (-|m| c^2, |m| c^2).
    """

    m: float
    hbar: float = 1.0
    c: float = 1.0
    e: float = 1.0

    def __post_init__(self) -> None:
        if not (self.hbar > 0.0 and self.c > 0.0 and self.e > 0.0):
            raise ValueError("hbar, c and e must all be positive")
        if not math.isfinite(self.m):
            raise ValueError("mass must be a finite real number")

    @property
    def mc2(self) -> float:
        """Rest energy m c^2 (signed)."""
        return self.m * self.c**2

    @property
    def gap_halfwidth(self) -> float:
        """Half-width |m| c^2 of the bulk gap; zero iff m = 0."""
        return abs(self.m) * self.c**2

    def require_mass(self) -> None:
        if self.m == 0.0:
            raise ValueError("m != 0 required: the bulk gap is empty for a massless system")


def z_from_zeta(zeta: float) -> complex:
    """Unit-circle label z of the boundary condition with parameter zeta.

    Inverse of :func:`zeta_from_z`; zeta = +-inf maps to z = 1 exactly.
    """
    if math.isinf(zeta):
        return complex(1.0, 0.0)
    return (1j * zeta - 1.0) / (1j * zeta + 1.0)


def zeta_from_z(z: complex, tol: float = _UNIT_CIRCLE_TOL) -> float:
    """Extended-real boundary parameter zeta with i zeta = (1 + z)/(1 - z).

    Rejects arguments farther than ``tol`` from the unit circle.  z = 1
    returns inf exactly.
    """
    z = complex(z)
    if abs(abs(z) - 1.0) > tol:
        raise ValueError(f"|z| = {abs(z)!r} is not on the unit circle (tol {tol})")
    denom = abs(1.0 - z) ** 2
    if z == 1.0 or denom == 0.0:
        return math.inf
    # For |z| = 1, (1 + z)/(1 - z) = 2i Im(z)/|1 - z|^2 is purely imaginary.
    return 2.0 * z.imag / denom


@dataclass(frozen=True)
class BoundaryParam:
    """Self-adjoint boundary condition w(0) = i zeta v(0).

    Stores both the extended-real zeta (math.inf for the v(0) = 0
    condition) and the redundant unit-circle label z, kept consistent on
    construction.
    """

    zeta: float
    z: complex

    def __post_init__(self) -> None:
        if abs(abs(self.z) - 1.0) > 1e-12:
            raise ValueError("z must have unit modulus")
        expected = z_from_zeta(self.zeta)
        if abs(self.z - expected) > 1e-12:
            raise ValueError("zeta and z are inconsistent")

    @classmethod
    def from_zeta(cls, zeta: float) -> "BoundaryParam":
        zeta = float(zeta)
        if math.isnan(zeta):
            raise ValueError("zeta must not be NaN")
        if math.isinf(zeta):
            zeta = math.inf  # -inf and +inf are the same boundary point
        return cls(zeta=zeta, z=z_from_zeta(zeta))

    @classmethod
    def from_z(cls, z: complex) -> "BoundaryParam":
        zeta = zeta_from_z(z)
        # Re-derive z from zeta so the pair is exactly consistent.
        return cls(zeta=zeta, z=z_from_zeta(zeta))

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.zeta)

    def spinor_direction(self) -> np.ndarray:
        """Unit spinor spanning the admissible boundary values."""
        if self.is_infinite:
            return np.array([0.0, 1.0], dtype=complex)
        s = 1.0 / math.sqrt(1.0 + self.zeta**2)
        return np.array([s, 1j * self.zeta * s], dtype=complex)


@dataclass(frozen=True)
class Spinor2:
    """Two-component spinor value (v, w) at a point."""

    v: complex
    w: complex

    def norm(self) -> float:
        return math.hypot(abs(self.v), abs(self.w))

    def normal_current(self) -> float:
        """Matrix element <psi| sigma1 |psi> = 2 Re(conj(v) w)."""
        return 2.0 * (self.v.conjugate() * self.w).real

    def tangential_current(self) -> float:
        """Matrix element <psi| sigma2 |psi> = 2 Im(conj(v) w)."""
        return 2.0 * (self.v.conjugate() * self.w).imag

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.w], dtype=complex)


def boundary_residual(psi0: Spinor2, bc: BoundaryParam) -> float:
    """Distance of the boundary value from the admissible subspace.

    Returns |w - i zeta v| / (||psi0|| sqrt(1 + zeta^2)) for finite zeta
    and |v| / ||psi0|| for zeta = inf; zero exactly when psi0 satisfies
    the boundary condition.
    """
    n = psi0.norm()
    if n == 0.0:
        raise ValueError("boundary spinor must not vanish")
    if bc.is_infinite:
        return abs(psi0.v) / n
    return abs(psi0.w - 1j * bc.zeta * psi0.v) / (n * math.sqrt(1.0 + bc.zeta**2))


@dataclass(frozen=True)
class EnergyWindow:
    """Open energy interval (lo, hi)."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"window requires lo < hi, got ({self.lo}, {self.hi})")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, energy: float) -> bool:
        return self.lo < energy < self.hi

    def require_inside_gap(self, p: PhysParams) -> None:
        """Reject windows not strictly inside the bulk gap."""
        p.require_mass()
        half = p.gap_halfwidth
        if self.lo <= -half or self.hi >= half:
            raise ValueError(
                f"window ({self.lo}, {self.hi}) must lie strictly inside the gap "
                f"(-{half}, {half})"
            )


class SwitchProfile(str, Enum):
    SMOOTHSTEP_CUBIC = "smoothstep-cubic"
    SMOOTHSTEP_QUINTIC = "smoothstep-quintic"
    TANH_CLAMPED = "scaled-tanh-clamped"


_TANH_SLOPE = 2.5


@dataclass(frozen=True)
class SwitchFunction:
    """Monotone 0 -> 1 ramp with derivative supported inside its window."""

    profile: SwitchProfile
    window: EnergyWindow

    def __call__(self, energy):
        t = np.clip((np.asarray(energy, dtype=float) - self.window.lo) / self.window.width, 0.0, 1.0)
        if self.profile is SwitchProfile.SMOOTHSTEP_CUBIC:
            out = t * t * (3.0 - 2.0 * t)
        elif self.profile is SwitchProfile.SMOOTHSTEP_QUINTIC:
            out = t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
        else:
            th = math.tanh(_TANH_SLOPE)
            out = (np.tanh(_TANH_SLOPE * (2.0 * t - 1.0)) + th) / (2.0 * th)
        if np.isscalar(energy):
            return float(out)
        return out

    def derivative(self, energy):
        e = np.asarray(energy, dtype=float)
        t = (e - self.window.lo) / self.window.width
        inside = (t > 0.0) & (t < 1.0)
        tc = np.clip(t, 0.0, 1.0)
        if self.profile is SwitchProfile.SMOOTHSTEP_CUBIC:
            d = 6.0 * tc * (1.0 - tc)
        elif self.profile is SwitchProfile.SMOOTHSTEP_QUINTIC:
            d = 30.0 * tc**2 * (1.0 - tc) ** 2
        else:
            th = math.tanh(_TANH_SLOPE)
            d = _TANH_SLOPE / th * (1.0 - np.tanh(_TANH_SLOPE * (2.0 * tc - 1.0)) ** 2)
        out = np.where(inside, d, 0.0) / self.window.width
        if np.isscalar(energy):
            return float(out)
        return out
