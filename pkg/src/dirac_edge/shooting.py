"""Bound states of the half-line fiber Hamiltonian by inward shooting.

The eigenvalue equation is integrated as the first-order system

    psi' = (i/(hbar c)) sigma1 (E - hbar c k2 sigma2 - (m c^2 + m1) sigma3 - V) psi

from a far point x_max down to the boundary, seeded with the decaying
eigendirection of the constant tail matrix.  Integrating inward makes the
physical (decaying) mode the numerically growing one, and a per-step
amplitude renormalization keeps the state vector at unit length, so the
stiff non-decaying mode never takes over.

For real profiles m1, V the fiber Hamiltonian commutes with the antiunitary
sigma3 * conj, so the decaying solution can be gauged with v real and w
purely imaginary.  The code integrates that real pair (v, Im w) with a
classical fixed-step RK4 scheme; the boundary condition w(0) = i zeta v(0)
becomes the scalar root problem  f(E) := Im w(0) / v(0) = zeta,  solved by
bracketing f on a scan of the search window and bisecting each bracket.
Complex potentials are unsupported (profile sampling rejects them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .analytic import bulk_edge, kappa_of
from .params import BoundaryParam, EnergyWindow, PhysParams, Spinor2
from .potentials import PerturbationSpec

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba present in the supported env
    HAVE_NUMBA = False

__all__ = [
    "MatchResult",
    "ShotTrajectory",
    "integrate_decaying",
    "boundary_ratio",
    "match_boundary",
    "match_boundary_all",
    "numeric_gap_state",
    "sigma2_expectation",
    "HAVE_NUMBA",
]

_LENGTH_FACTOR = 25.0
_SCAN_POINTS = 64
_BISECT_XTOL = 1e-12
_RESIDUAL_TOL = 1e-9
_MAX_KAPPA_STEP = 0.1


def _shoot_impl(e_arr, k2, mc2, hbar_c, pot_half, mass_half, h, n_steps, v0_out, w0_out):
    # pot_half/mass_half are V and m1 sampled on the half-step grid x = j h/2.
    for idx in range(e_arr.shape[0]):
        e = e_arr[idx]
        kap_hc = math.sqrt((hbar_c * k2) ** 2 + mc2 * mc2 - e * e)
        va = mc2 + e
        wa = kap_hc + hbar_c * k2
        vb = kap_hc - hbar_c * k2
        wb = mc2 - e
        if va * va + wa * wa >= vb * vb + wb * wb:
            v, w = va, wa
        else:
            v, w = vb, wb
        s = math.hypot(v, w)
        v /= s
        w /= s
        step = -h
        for i in range(n_steps - 1, -1, -1):
            top = 2 * i + 2
            mid = 2 * i + 1
            bot = 2 * i
            a = (e - pot_half[top] + mc2 + mass_half[top]) / hbar_c
            b = (e - pot_half[top] - mc2 - mass_half[top]) / hbar_c
            kv1 = k2 * v - a * w
            kw1 = b * v - k2 * w
            a = (e - pot_half[mid] + mc2 + mass_half[mid]) / hbar_c
            b = (e - pot_half[mid] - mc2 - mass_half[mid]) / hbar_c
            tv = v + 0.5 * step * kv1
            tw = w + 0.5 * step * kw1
            kv2 = k2 * tv - a * tw
            kw2 = b * tv - k2 * tw
            tv = v + 0.5 * step * kv2
            tw = w + 0.5 * step * kw2
            kv3 = k2 * tv - a * tw
            kw3 = b * tv - k2 * tw
            a = (e - pot_half[bot] + mc2 + mass_half[bot]) / hbar_c
            b = (e - pot_half[bot] - mc2 - mass_half[bot]) / hbar_c
            tv = v + step * kv3
            tw = w + step * kw3
            kv4 = k2 * tv - a * tw
            kw4 = b * tv - k2 * tw
            v += step / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
            w += step / 6.0 * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
            s = math.hypot(v, w)
            v /= s
            w /= s
        v0_out[idx] = v
        w0_out[idx] = w


def _trajectory_impl(e, k2, mc2, hbar_c, pot_half, mass_half, h, n_steps, v_out, w_out, log_out):
    kap_hc = math.sqrt((hbar_c * k2) ** 2 + mc2 * mc2 - e * e)
    va = mc2 + e
    wa = kap_hc + hbar_c * k2
    vb = kap_hc - hbar_c * k2
    wb = mc2 - e
    if va * va + wa * wa >= vb * vb + wb * wb:
        v, w = va, wa
    else:
        v, w = vb, wb
    s = math.hypot(v, w)
    v /= s
    w /= s
    v_out[n_steps] = v
    w_out[n_steps] = w
    log_out[n_steps] = 0.0
    step = -h
    for i in range(n_steps - 1, -1, -1):
        top = 2 * i + 2
        mid = 2 * i + 1
        bot = 2 * i
        a = (e - pot_half[top] + mc2 + mass_half[top]) / hbar_c
        b = (e - pot_half[top] - mc2 - mass_half[top]) / hbar_c
        kv1 = k2 * v - a * w
        kw1 = b * v - k2 * w
        a = (e - pot_half[mid] + mc2 + mass_half[mid]) / hbar_c
        b = (e - pot_half[mid] - mc2 - mass_half[mid]) / hbar_c
        tv = v + 0.5 * step * kv1
        tw = w + 0.5 * step * kw1
        kv2 = k2 * tv - a * tw
        kw2 = b * tv - k2 * tw
        tv = v + 0.5 * step * kv2
        tw = w + 0.5 * step * kw2
        kv3 = k2 * tv - a * tw
        kw3 = b * tv - k2 * tw
        a = (e - pot_half[bot] + mc2 + mass_half[bot]) / hbar_c
        b = (e - pot_half[bot] - mc2 - mass_half[bot]) / hbar_c
        tv = v + step * kv3
        tw = w + step * kw3
        kv4 = k2 * tv - a * tw
        kw4 = b * tv - k2 * tw
        v += step / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
        w += step / 6.0 * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
        s = math.hypot(v, w)
        v /= s
        w /= s
        v_out[i] = v
        w_out[i] = w
        log_out[i] = log_out[i + 1] + math.log(s)


if HAVE_NUMBA:
    _shoot_kernel = njit(cache=True)(_shoot_impl)
    _trajectory_kernel = njit(cache=True)(_trajectory_impl)
else:  # pragma: no cover
    _shoot_kernel = _shoot_impl
    _trajectory_kernel = _trajectory_impl


@dataclass(frozen=True)
class MatchResult:
    """A root of the boundary-matching function."""

    energy: float
    residual: float
    bracket: tuple[float, float]
    evaluations: int


@dataclass(frozen=True)
class ShotTrajectory:
    """Inward-integrated solution: unit direction plus log amplitude on the grid."""

    x: np.ndarray
    v: np.ndarray
    w_imag: np.ndarray
    log_amp: np.ndarray

    def amplitudes(self) -> tuple[np.ndarray, np.ndarray]:
        """(v, Im w) with the exponential envelope restored, peak-scaled."""
        amp = np.exp(self.log_amp - np.max(self.log_amp))
        return self.v * amp, self.w_imag * amp


def _compton_length(p: PhysParams) -> float:
    return p.hbar / (abs(p.m) * p.c)


def _sample_half_grid(w: PerturbationSpec | None, h: float, n_steps: int):
    xs = 0.5 * h * np.arange(2 * n_steps + 1)
    if w is None:
        zeros = np.zeros_like(xs)
        return zeros, zeros
    m1_vals, v_vals = w.sample(xs)
    return np.ascontiguousarray(v_vals), np.ascontiguousarray(m1_vals)


def _grid_from(x_max: float, step: float) -> tuple[int, float]:
    n_steps = max(16, int(math.ceil(x_max / step)))
    return n_steps, x_max / n_steps


def integrate_decaying(
    e: float,
    k2: float,
    p: PhysParams,
    w: PerturbationSpec | None = None,
    x_max: float | None = None,
    step: float | None = None,
    return_trajectory: bool = False,
):
    """Integrate the decaying solution from x_max down to the boundary.

    Returns the gauge-fixed unit boundary spinor (v real >= 0, w purely
    imaginary), or the full ShotTrajectory when requested.  Raises when E
    admits no decaying tail solution or the step is too coarse for the
    decay rate.
    """
    p.require_mass()
    kappa = kappa_of(k2, e, p)  # raises outside the fiber gap
    cutoff = w.support_cutoff if w is not None else 0.0
    if step is None:
        step = min(0.01 * _compton_length(p), 0.05 / kappa)
    if kappa * step > _MAX_KAPPA_STEP:
        raise ValueError(f"step {step} too large for decay rate {kappa}")
    if x_max is None:
        x_max = cutoff + _LENGTH_FACTOR / kappa
    if x_max < cutoff + 10.0 / kappa:
        raise ValueError("x_max leaves the tail insufficiently decayed")
    n_steps, h = _grid_from(x_max, step)
    pot_half, mass_half = _sample_half_grid(w, h, n_steps)
    if return_trajectory:
        v_out = np.empty(n_steps + 1)
        w_out = np.empty(n_steps + 1)
        log_out = np.empty(n_steps + 1)
        _trajectory_kernel(
            e, k2, p.mc2, p.hbar * p.c, pot_half, mass_half, h, n_steps, v_out, w_out, log_out
        )
        if v_out[0] < 0.0 or (v_out[0] == 0.0 and w_out[0] < 0.0):
            v_out, w_out = -v_out, -w_out
        return ShotTrajectory(x=h * np.arange(n_steps + 1), v=v_out, w_imag=w_out, log_amp=log_out)
    e_arr = np.array([e], dtype=float)
    v0 = np.empty(1)
    w0 = np.empty(1)
    _shoot_kernel(e_arr, k2, p.mc2, p.hbar * p.c, pot_half, mass_half, h, n_steps, v0, w0)
    v, wim = float(v0[0]), float(w0[0])
    if v < 0.0 or (v == 0.0 and wim < 0.0):
        v, wim = -v, -wim
    return Spinor2(complex(v, 0.0), complex(0.0, wim))


def boundary_ratio(
    e: float,
    k2: float,
    p: PhysParams,
    w: PerturbationSpec | None = None,
    x_max: float | None = None,
    step: float | None = None,
) -> float:
    """Matching function f(E) = Im w(0) / v(0); +-inf at the v(0) = 0 condition."""
    s = integrate_decaying(e, k2, p, w, x_max=x_max, step=step)
    v, wim = s.v.real, s.w.imag
    if v == 0.0:
        return math.inf if wim > 0 else -math.inf
    return wim / v


def _window_tuple(window, p: PhysParams, k2: float) -> tuple[float, float] | None:
    cap = 0.98 * bulk_edge(k2, p)
    if window is None:
        lo, hi = -cap, cap
    elif isinstance(window, EnergyWindow):
        lo, hi = window.lo, window.hi
    else:
        lo, hi = window
    lo, hi = max(lo, -cap), min(hi, cap)
    if lo >= hi:
        return None
    return lo, hi


def match_boundary_all(
    k2: float,
    p: PhysParams,
    bc: BoundaryParam,
    w: PerturbationSpec | None = None,
    window: EnergyWindow | tuple[float, float] | None = None,
    n_scan: int = _SCAN_POINTS,
    xtol: float = _BISECT_XTOL,
    step: float | None = None,
    x_max: float | None = None,
) -> list[MatchResult]:
    """All verified boundary-matching roots inside the search window.

    The window is clipped to 98% of the fiber gap so a decaying tail always
    exists.  Sign changes of f - zeta across a pole of f are rejected by the
    residual check, so only genuine eigenvalues are returned, sorted by
    energy.  For zeta = inf the reciprocal ratio v(0)/Im w(0) is matched to
    zero instead.
    """
    p.require_mass()
    box = _window_tuple(window, p, k2)
    if box is None:
        return []
    lo, hi = box
    cutoff = w.support_cutoff if w is not None else 0.0
    hc = p.hbar * p.c
    e2_max = max(lo * lo, hi * hi)
    kappa_min = math.sqrt((hc * k2) ** 2 + p.mc2**2 - e2_max) / hc
    kappa_max = bulk_edge(k2, p) / hc
    if step is None:
        step = min(0.01 * _compton_length(p), 0.05 / kappa_max)
    if kappa_max * step > _MAX_KAPPA_STEP:
        raise ValueError(f"step {step} too large for decay rate {kappa_max}")
    if x_max is None:
        x_max = cutoff + _LENGTH_FACTOR / kappa_min
    n_steps, h = _grid_from(x_max, step)
    pot_half, mass_half = _sample_half_grid(w, h, n_steps)

    evals = 0

    def ratios(e_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        nonlocal evals
        evals += e_values.size
        v0 = np.empty(e_values.size)
        w0 = np.empty(e_values.size)
        _shoot_kernel(
            np.ascontiguousarray(e_values, dtype=float),
            k2, p.mc2, hc, pot_half, mass_half, h, n_steps, v0, w0,
        )
        return v0, w0

    def target(v0: np.ndarray, w0: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            if bc.is_infinite:
                return v0 / w0
            return w0 / v0 - bc.zeta

    e_grid = np.linspace(lo, hi, n_scan)
    v0, w0 = ratios(e_grid)
    s_grid = target(v0, w0)

    residual_tol = _RESIDUAL_TOL * max(1.0, abs(bc.zeta) if not bc.is_infinite else 1.0)
    roots: list[MatchResult] = []
    for i in range(n_scan - 1):
        sa, sb = s_grid[i], s_grid[i + 1]
        if not (math.isfinite(sa) and math.isfinite(sb)):
            continue
        if sa == 0.0:
            sa = -sb  # scan point exactly on a root: treat as a bracket
        if sa * sb >= 0.0:
            continue
        a, b = float(e_grid[i]), float(e_grid[i + 1])
        fa, fb = sa, sb
        while b - a > xtol:
            mid = 0.5 * (a + b)
            fm = float(target(*ratios(np.array([mid])))[0])
            if fm == 0.0:
                a = b = mid
                break
            if fa * fm < 0.0:
                b, fb = mid, fm
            else:
                a, fa = mid, fm
        e_root = 0.5 * (a + b)
        res = abs(float(target(*ratios(np.array([e_root])))[0]))
        if res < residual_tol:
            roots.append(
                MatchResult(
                    energy=e_root,
                    residual=res,
                    bracket=(float(e_grid[i]), float(e_grid[i + 1])),
                    evaluations=evals,
                )
            )
    roots.sort(key=lambda r: r.energy)
    return roots


def match_boundary(
    k2: float,
    p: PhysParams,
    bc: BoundaryParam,
    w: PerturbationSpec | None = None,
    window: EnergyWindow | tuple[float, float] | None = None,
    n_scan: int = _SCAN_POINTS,
    xtol: float = _BISECT_XTOL,
    step: float | None = None,
    x_max: float | None = None,
) -> MatchResult | None:
    """Lowest-energy verified root, or None when the window holds no state."""
    roots = match_boundary_all(
        k2, p, bc, w, window=window, n_scan=n_scan, xtol=xtol, step=step, x_max=x_max
    )
    return roots[0] if roots else None


def _reconstruct(match_energy, k2, p, w):
    traj = integrate_decaying(match_energy, k2, p, w, return_trajectory=True)
    vv, ww = traj.amplitudes()
    h = traj.x[1] - traj.x[0]
    if math.hypot(vv[-1], ww[-1]) > 1e-6 * np.max(np.hypot(vv, ww)):
        raise RuntimeError("tail not decayed at x_max; normalization unreliable")
    nrm = math.sqrt(simpson(vv * vv + ww * ww, dx=h))
    return traj, vv / nrm, ww / nrm, h


def numeric_gap_state(
    match: MatchResult,
    k2: float,
    p: PhysParams,
    bc: BoundaryParam,
    w: PerturbationSpec | None = None,
):
    """Normalized bound state for a matched energy.

    Re-integrates storing the full solution, normalizes by Simpson
    quadrature and estimates the decay rate from the log-amplitude slope
    over the constant-coefficient tail.
    """
    from .analytic import GapState

    traj, vv, ww, h = _reconstruct(match.energy, k2, p, w)
    cutoff = w.support_cutoff if w is not None else 0.0
    x = traj.x
    x_max = x[-1]
    lo = cutoff + 0.50 * (x_max - cutoff)
    hi = cutoff + 0.85 * (x_max - cutoff)
    sel = (x >= lo) & (x <= hi)
    slope = np.polyfit(x[sel], traj.log_amp[sel], 1)[0]
    kappa_est = -float(slope)

    v0, w0 = float(traj.v[0]), float(traj.w_imag[0])
    spinor = Spinor2(complex(v0, 0.0), complex(0.0, w0))
    norm = math.hypot(vv[0], ww[0])
    return GapState(k2=k2, energy=match.energy, kappa=kappa_est, spinor=spinor, norm=norm)


def sigma2_expectation(
    energy: float,
    k2: float,
    p: PhysParams,
    w: PerturbationSpec | None = None,
) -> float:
    """Velocity expectation <psi| sigma2 |psi> of the bound state by quadrature."""
    _, vv, ww, h = _reconstruct(energy, k2, p, w)
    return float(simpson(2.0 * vv * ww, dx=h))
