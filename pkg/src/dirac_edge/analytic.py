"""Closed-form spectrum of the half-line fiber Hamiltonian.

These are exact formulas in the model parameters and serve as the oracle
for every numerical solver in the package:

* bulk band edge        E_b(k2) = sqrt((hbar c k2)^2 + (m c^2)^2)
* in-gap branch         E_g(k2) = (2 zeta hbar c k2 + (1 - zeta^2) m c^2) / (1 + zeta^2),
  which exists iff      hbar k2 (zeta^2 - 1) > -2 m c zeta
* decay rate            hbar c kappa = sqrt((hbar c k2)^2 + (m c^2)^2 - E^2)
* boundary-state slope  (1/(hbar c)) dE_g/dk2 = 2 zeta / (1 + zeta^2)

The branch traverses the bulk gap (-|m| c^2, |m| c^2) iff m zeta > 0, and
the edge conductivity is sgn(m) e^2/h in that case and zero otherwise; the
bulk Hall conductivity is (1/2) sgn(m) e^2/h.  zeta = inf is a band-edge
degenerate case (the formula limit sits at -m c^2 with no strictly
interior branch) and is classified here as "no gap state".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import BoundaryParam, PhysParams, Spinor2, boundary_residual

__all__ = [
    "SIGMA1",
    "SIGMA2",
    "SIGMA3",
    "GapState",
    "SpectralVerdict",
    "bulk_edge",
    "gap_condition",
    "gap_eigenvalue",
    "k_crit",
    "crosses_gap",
    "sigma_edge_analytic",
    "sigma_bulk",
    "sigma_bulk_from_edge_mean",
    "kappa_of",
    "kappa_gap_state",
    "q_matrix",
    "gap_state",
    "current_expectation",
    "dispersion_slope",
]

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class SpectralVerdict:
    """In-gap content of one fiber: bulk edge plus the optional gap eigenvalue."""

    has_gap_state: bool
    e_gap: float | None
    e_bulk: float


@dataclass(frozen=True)
class GapState:
    """Normalized bound edge state of one fiber.

    The wavefunction is  norm * spinor * exp(-kappa x1)  with a unit
    boundary spinor gauged so v is real and nonnegative (then w is purely
    imaginary); norm = sqrt(2 kappa) makes the state L2-normalized.
    """

    k2: float
    energy: float
    kappa: float
    spinor: Spinor2
    norm: float

    def wavefunction(self, x) -> np.ndarray:
        """Spinor samples on x >= 0, shape (len(x), 2)."""
        x = np.asarray(x, dtype=float)
        envelope = self.norm * np.exp(-self.kappa * x)
        return np.outer(envelope, self.spinor.as_array())


def bulk_edge(k2: float, p: PhysParams) -> float:
    """Lower edge E_b(k2) of the positive continuum; even in k2."""
    return math.hypot(p.hbar * p.c * k2, p.mc2)


def gap_condition(k2: float, p: PhysParams, bc: BoundaryParam) -> bool:
    """Strict existence condition for the in-gap eigenvalue at momentum k2."""
    if bc.is_infinite:
        return False
    return p.hbar * k2 * (bc.zeta**2 - 1.0) > -2.0 * p.m * p.c * bc.zeta


def gap_eigenvalue(k2: float, p: PhysParams, bc: BoundaryParam) -> SpectralVerdict:
    """Bulk edge and, when the existence condition holds, the gap eigenvalue."""
    p.require_mass()
    e_bulk = bulk_edge(k2, p)
    if not gap_condition(k2, p, bc):
        return SpectralVerdict(False, None, e_bulk)
    zeta = bc.zeta
    e_gap = (2.0 * zeta * p.hbar * p.c * k2 + (1.0 - zeta**2) * p.mc2) / (1.0 + zeta**2)
    return SpectralVerdict(True, e_gap, e_bulk)


def k_crit(p: PhysParams, bc: BoundaryParam) -> float | None:
    """Momentum where the gap branch meets the bulk edge; None for zeta^2 = 1.

    For zeta^2 > 1 the branch exists for k2 > k_crit, for zeta^2 < 1 for
    k2 < k_crit.  zeta = inf is rejected (no threshold exists there).
    """
    p.require_mass()
    if bc.is_infinite:
        raise ValueError("k_crit is undefined for zeta = inf")
    zeta = bc.zeta
    if zeta**2 == 1.0:
        return None
    return -2.0 * p.m * p.c * zeta / (p.hbar * (zeta**2 - 1.0))


def crosses_gap(p: PhysParams, bc: BoundaryParam) -> bool:
    """Whether the branch traverses the whole bulk gap: m zeta > 0.

    False for zeta = 0 and for zeta = inf.
    """
    p.require_mass()
    if bc.is_infinite or bc.zeta == 0.0:
        return False
    # sign comparison, not a product: m * zeta can underflow to 0 for tiny zeta
    return (p.m > 0.0) == (bc.zeta > 0.0)


def sigma_edge_analytic(p: PhysParams, bc: BoundaryParam) -> int:
    """Edge conductivity in units e^2/h: sgn(m) if m zeta > 0, else 0."""
    if crosses_gap(p, bc):
        return 1 if p.m > 0 else -1
    return 0


def sigma_bulk(p: PhysParams) -> float:
    """Bulk Hall conductivity (1/2) sgn(m) in units e^2/h."""
    p.require_mass()
    return 0.5 * math.copysign(1.0, p.m)


def sigma_bulk_from_edge_mean(p: PhysParams, bc: BoundaryParam) -> float:
    """Arithmetic mean of the edge conductivities at zeta and -zeta.

    Equals sigma_bulk(p) for every finite zeta != 0.
    """
    if bc.is_infinite or bc.zeta == 0.0:
        raise ValueError("the mean relation needs zeta finite and nonzero")
    mirror = BoundaryParam.from_zeta(-bc.zeta)
    return 0.5 * (sigma_edge_analytic(p, bc) + sigma_edge_analytic(p, mirror))


def kappa_of(k2: float, energy: float, p: PhysParams) -> float:
    """Decay rate kappa > 0 of a bound state at (k2, E); raises outside the fiber gap."""
    hc = p.hbar * p.c
    val = (hc * k2) ** 2 + p.mc2**2 - energy**2
    if val <= 0.0:
        raise ValueError(f"E = {energy} has no decaying solution at k2 = {k2}")
    return math.sqrt(val) / hc


def kappa_gap_state(k2: float, p: PhysParams, bc: BoundaryParam) -> float:
    """Decay rate of the gap state in closed form.

    Algebraically equal to kappa_of(k2, E_g(k2)) but free of the m^2 - E^2
    cancellation that costs half the digits near the band edge:
    kappa = (hbar k2 (zeta^2 - 1) + 2 zeta m c) / (hbar (1 + zeta^2)),
    positive exactly when the existence condition holds.
    """
    if not gap_condition(k2, p, bc):
        raise ValueError(f"no gap state at k2 = {k2} for zeta = {bc.zeta}, m = {p.m}")
    zeta = bc.zeta
    kappa = (p.hbar * k2 * (zeta**2 - 1.0) + 2.0 * zeta * p.m * p.c) / (
        p.hbar * (1.0 + zeta**2)
    )
    if kappa <= 0.0:
        raise ValueError(f"band-edge degenerate state at k2 = {k2} (kappa underflow)")
    return kappa


def q_matrix(k2: float, energy: float, p: PhysParams) -> np.ndarray:
    """Boundary-value matrix i hbar c kappa sigma1 + hbar c k2 sigma2 + m c^2 sigma3.

    Its eigenvector with eigenvalue E is the boundary spinor of the decaying
    solution; Q^2 = E^2 and tr Q = 0.
    """
    hc = p.hbar * p.c
    kappa = kappa_of(k2, energy, p)
    return 1j * hc * kappa * SIGMA1 + hc * k2 * SIGMA2 + p.mc2 * SIGMA3


def gap_state(k2: float, p: PhysParams, bc: BoundaryParam) -> GapState:
    """Normalized in-gap bound state at momentum k2.

    Raises when the existence condition fails.  The boundary spinor is the
    E-eigenvector of the Q matrix, which automatically satisfies the
    boundary condition; both facts are verified to 1e-10.
    """
    verdict = gap_eigenvalue(k2, p, bc)
    if not verdict.has_gap_state:
        raise ValueError(
            f"no gap state at k2 = {k2} for zeta = {bc.zeta}, m = {p.m} "
            "(existence condition fails)"
        )
    energy = verdict.e_gap
    kappa = kappa_gap_state(k2, p, bc)
    hc = p.hbar * p.c
    q = 1j * hc * kappa * SIGMA1 + hc * k2 * SIGMA2 + p.mc2 * SIGMA3
    # Columns of Q + E span the E-eigenspace (since (Q - E)(Q + E) = 0);
    # pick the better-conditioned one.
    b = q + energy * np.eye(2)
    col = b[:, 0] if np.linalg.norm(b[:, 0]) >= np.linalg.norm(b[:, 1]) else b[:, 1]
    col = col / np.linalg.norm(col)
    # Gauge: v real >= 0, which forces w purely imaginary.
    if abs(col[0]) == 0.0:
        raise RuntimeError("gap state with vanishing v component; inconsistent with finite zeta")
    col = col * (abs(col[0]) / col[0])
    spinor = Spinor2(complex(col[0].real, 0.0), complex(0.0, col[1].imag))

    scale = abs(energy) + p.gap_halfwidth
    if np.linalg.norm(q @ spinor.as_array() - energy * spinor.as_array()) > 1e-10 * scale:
        raise RuntimeError("boundary spinor failed the eigenvector check")
    if boundary_residual(spinor, bc) > 1e-10:
        raise RuntimeError("boundary spinor failed the boundary condition check")

    norm = math.sqrt(2.0 * kappa)
    return GapState(k2=k2, energy=energy, kappa=kappa, spinor=spinor, norm=norm)


def dispersion_slope(bc: BoundaryParam) -> float:
    """Slope (1/(hbar c)) dE_g/dk2 = 2 zeta / (1 + zeta^2); zero for zeta = inf."""
    if bc.is_infinite:
        return 0.0
    return 2.0 * bc.zeta / (1.0 + bc.zeta**2)


def current_expectation(state: GapState, p: PhysParams, bc: BoundaryParam) -> float:
    """Velocity expectation <psi| sigma2 |psi> of a normalized gap state.

    Dimensionless (units of c); equals 2 zeta / (1 + zeta^2) independently
    of k2, and (1/(hbar c)) dE_g/dk2 by the Feynman-Hellmann relation.
    """
    s = state.spinor
    return s.tangential_current() / (abs(s.v) ** 2 + abs(s.w) ** 2)
