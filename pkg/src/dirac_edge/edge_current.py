"""Edge current and edge conductivity from the in-gap dispersion.

Two independent routes:

* direct-integral: J = e c * integral of <psi_k| sigma2 |psi_k> dk/(2 pi)
  over the momenta whose branch energy lies in the chosen window;
* switch-function: the same current written as a trace of g'(H) v2 with a
  monotone 0 -> 1 switch g ramping inside the window, which telescopes to
  sum_branches [g(E at the upper k end) - g(E at the lower k end)].

Both are reported as a conductivity in units e^2/h via
sigma_e = J h / (e |window|); for the unperturbed system the result is the
integer sgn(m) [m zeta > 0] independent of the window and of the switch
profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import analytic, shooting
from .flow import DispersionBranch, sweep_dispersion
from .numerics import adaptive_simpson, bisect_root
from .params import BoundaryParam, EnergyWindow, PhysParams, SwitchFunction
from .potentials import PerturbationSpec

__all__ = [
    "EdgeCurrentResult",
    "edge_current_direct",
    "edge_current_switch",
    "switch_quadrature_check",
    "to_summary",
]

_FLAT_SLOPE_TOL = 1e-12


@dataclass(frozen=True)
class EdgeCurrentResult:
    """Current (units e c / length) and conductivity (units e^2/h)."""

    current: float
    window: EnergyWindow
    sigma_e: float
    method: str


def to_summary(result: EdgeCurrentResult, p: PhysParams, bc: BoundaryParam) -> dict:
    zeta = "inf" if bc.is_infinite else bc.zeta
    return {
        "m": p.m,
        "zeta": zeta,
        "window": [result.window.lo, result.window.hi],
        "J": result.current,
        "sigma_e": result.sigma_e,
        "method": result.method,
    }


def _default_branches(p, bc, w, source, n_samples, for_window):
    return sweep_dispersion(p, bc, w, n_samples=n_samples, source=source)


def _monotone_segments(branch: DispersionBranch):
    """Index ranges [i0, i1] of strictly monotone energy runs."""
    e = branch.energy
    if len(e) < 2:
        return
    diffs = np.diff(e)
    start = 0
    sign = 0.0
    for i, d in enumerate(diffs):
        s = math.copysign(1.0, d) if abs(d) > _FLAT_SLOPE_TOL else 0.0
        if sign == 0.0:
            sign = s
            if s == 0.0:
                start = i + 1
            continue
        if s != sign:
            yield start, i
            start = i
            sign = s if s != 0.0 else 0.0
    if sign != 0.0 and start < len(e) - 1:
        yield start, len(e) - 1


def _preimage_of(branch, i0, i1, target):
    """Momentum where the sampled branch segment crosses the target energy."""
    e = branch.energy
    k = branch.k2
    for i in range(i0, i1):
        a, b = e[i] - target, e[i + 1] - target
        if a == 0.0:
            return float(k[i])
        if a * b < 0.0:
            if branch.eval_fn is not None:
                def f(kk):
                    val = branch.eval_fn(kk)
                    return (val - target) if val is not None else math.nan
                return bisect_root(f, float(k[i]), float(k[i + 1]), xtol=1e-13)
            return float(k[i] + (k[i + 1] - k[i]) * (e[i] - target) / (e[i] - e[i + 1]))
    if e[i1] == target:
        return float(k[i1])
    raise ValueError("target energy not bracketed by the segment")


def _sigma2_integrand(p, bc, w, source, branch):
    if source == "analytic":
        def integrand(k):
            return analytic.current_expectation(analytic.gap_state(k, p, bc), p, bc)
        return integrand
    if source == "shooting":
        half = p.gap_halfwidth
        def integrand(k):
            e_guess = float(np.interp(k, branch.k2, branch.energy))
            pad = 0.15 * half
            match = shooting.match_boundary(
                k, p, bc, w, window=(e_guess - pad, e_guess + pad)
            )
            if match is None:
                raise RuntimeError(f"lost the branch at k2 = {k} during quadrature")
            return shooting.sigma2_expectation(match.energy, k, p, w)
        return integrand
    raise ValueError("edge currents support the analytic and shooting sources only")


def edge_current_direct(
    p: PhysParams,
    bc: BoundaryParam,
    w: PerturbationSpec | None = None,
    window: EnergyWindow | None = None,
    source: str = "analytic",
    branches: Sequence[DispersionBranch] | None = None,
    n_samples: int = 257,
    tol: float = 1e-9,
) -> EdgeCurrentResult:
    """Edge current by momentum-space integration over the window preimage."""
    if window is None:
        raise ValueError("an energy window is required")
    window.require_inside_gap(p)
    if branches is None:
        branches = _default_branches(p, bc, w, source, n_samples, window)
    quad_tol = tol if source == "analytic" else max(tol, 1e-5)
    total = 0.0
    for br in branches:
        integrand = _sigma2_integrand(p, bc, w, source, br)
        for i0, i1 in _monotone_segments(br):
            seg_lo = min(br.energy[i0], br.energy[i1])
            seg_hi = max(br.energy[i0], br.energy[i1])
            e_lo = max(seg_lo, window.lo)
            e_hi = min(seg_hi, window.hi)
            if e_lo >= e_hi:
                continue
            k_a = _preimage_of(br, i0, i1, e_lo)
            k_b = _preimage_of(br, i0, i1, e_hi)
            lo, hi = (k_a, k_b) if k_a <= k_b else (k_b, k_a)
            total += adaptive_simpson(integrand, lo, hi, tol=quad_tol)
    current = p.e * p.c * total / (2.0 * math.pi)
    h_planck = 2.0 * math.pi * p.hbar
    sigma_e = current * h_planck / (p.e * window.width)
    return EdgeCurrentResult(
        current=current, window=window, sigma_e=sigma_e, method="direct-integral"
    )


def edge_current_switch(
    p: PhysParams,
    bc: BoundaryParam,
    w: PerturbationSpec | None = None,
    switch: SwitchFunction | None = None,
    source: str = "analytic",
    branches: Sequence[DispersionBranch] | None = None,
    n_samples: int = 257,
) -> EdgeCurrentResult:
    """Edge current via the telescoped switch-function trace.

    Every branch contributes g(E at its upper-k end) - g(E at its lower-k
    end); branches whose ends stop strictly inside the ramp trigger a range
    widening (the sweep was too narrow) and finally an error.
    """
    if switch is None:
        raise ValueError("a switch function is required")
    window = switch.window
    window.require_inside_gap(p)

    auto = branches is None
    k_range = None
    attempts = 3 if auto else 1
    for attempt in range(attempts):
        if auto:
            if k_range is None:
                from .flow import recommended_k_range

                k_range = recommended_k_range(p, bc, w)
            branches = sweep_dispersion(
                p, bc, w, k_range=k_range, n_samples=n_samples, source=source
            )
        truncated = [
            br
            for br in branches
            if window.contains(br.energy[0]) or window.contains(br.energy[-1])
        ]
        if not truncated:
            break
        if auto and attempt < attempts - 1:
            k_range = (1.5 * k_range[0], 1.5 * k_range[1])
            continue
        raise RuntimeError(
            "a branch does not span the switch ramp on both sides; "
            f"widen the momentum range (stuck ends near {truncated[0].energy[-1]})"
        )

    sigma_e = 0.0
    for br in branches:
        sigma_e += float(switch(br.energy[-1]) - switch(br.energy[0]))
    h_planck = 2.0 * math.pi * p.hbar
    current = sigma_e * p.e * window.width / h_planck
    return EdgeCurrentResult(
        current=current, window=window, sigma_e=sigma_e, method="switch-function"
    )


def switch_quadrature_check(
    branches: Sequence[DispersionBranch], switch: SwitchFunction
) -> float:
    """Cross-check path: trapezoid quadrature of g'(E(k)) dE/dk over samples.

    Equals the telescoped switch conductivity up to sampling error.
    """
    total = 0.0
    for br in branches:
        g_vals = switch(br.energy)
        total += float(np.sum(np.diff(g_vals)))
    return total
