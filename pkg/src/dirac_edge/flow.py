"""Dispersion sampling, branch continuity tracking, and spectral flow.

The spectral flow through a reference energy is the net signed number of
eigenvalue-branch crossings as the momentum sweeps the sampled range:
+1 when a branch passes from below to above, -1 for the converse.  For
the unperturbed system it equals the edge conductivity in units e^2/h.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import analytic, lattice, shooting
from .params import BoundaryParam, PhysParams
from .potentials import PerturbationSpec

__all__ = [
    "DispersionBranch",
    "FlowResult",
    "StabilityRecord",
    "BranchTrackingError",
    "recommended_k_range",
    "sweep_dispersion",
    "spectral_flow",
    "stability_scan",
]

_REFERENCE_NUDGE = 1e-9
_EXIT_SLACK = 3.0


class BranchTrackingError(RuntimeError):
    """A branch terminated strictly inside the gap away from the range ends."""


@dataclass
class DispersionBranch:
    """One continuity-tracked in-gap eigenvalue branch.

    ``cap_lo``/``cap_hi`` record the per-sample search window actually used,
    so flow counting can tell a legitimate band-edge exit from a tracking
    failure.  ``axis`` is "k2" for momentum sweeps and "theta" for reduced
    zone sweeps.
    """

    k2: np.ndarray
    energy: np.ndarray
    source: str
    in_gap: np.ndarray
    cap_lo: np.ndarray
    cap_hi: np.ndarray
    axis: str = "k2"
    eval_fn: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (len(self.k2) == len(self.energy) == len(self.in_gap)):
            raise ValueError("branch arrays must have equal length")


@dataclass(frozen=True)
class FlowResult:
    flow: int
    crossings: list[tuple[float, int]]
    reference_energy: float


@dataclass(frozen=True)
class StabilityRecord:
    sup_norm: float
    flow: int
    unchanged: bool
    within_hypothesis: bool


def recommended_k_range(
    p: PhysParams, bc: BoundaryParam, w: PerturbationSpec | None = None, margin: float = 1.2
) -> tuple[float, float]:
    """Momentum range wide enough for every branch to exit the bulk gap.

    Covers the analytic gap-exit momenta zeta m c / hbar and -m c/(zeta hbar),
    plus the branch birth point k_crit where it applies; perturbed sweeps are
    widened by another 50%.
    """
    p.require_mass()
    scale = abs(p.m) * p.c / p.hbar
    if bc.is_infinite or bc.zeta == 0.0:
        reach = 2.0 * scale
    else:
        zeta = abs(bc.zeta)
        reach = (1.0 + zeta**2) / (2.0 * zeta) * scale
        if zeta != 1.0:
            kc = analytic.k_crit(p, bc)
            reach += abs(kc)
        reach = max(reach, max(zeta, 1.0 / zeta) * scale)
    if w is not None and w.sup_norm > 0.0:
        margin *= 1.5
    r = margin * reach
    return (-r, r)


def _states_analytic(k_values, p, bc):
    out = []
    for k in k_values:
        verdict = analytic.gap_eigenvalue(k, p, bc)
        energies = [verdict.e_gap] if verdict.has_gap_state else []
        caps = (-verdict.e_bulk, verdict.e_bulk)
        out.append((energies, caps))
    return out


def _states_shooting(k_values, p, bc, w, window):
    half = p.gap_halfwidth
    out = []
    for k in k_values:
        cap = min(1.2 * half, 0.98 * analytic.bulk_edge(k, p))
        box = (max(-cap, window[0]), min(cap, window[1])) if window else (-cap, cap)
        if box[0] >= box[1]:
            out.append(([], box))
            continue
        roots = shooting.match_boundary_all(k, p, bc, w, window=box)
        out.append(([r.energy for r in roots], box))
    return out


def _states_discrete(k_values, p, bc, w, window, grid, wilson_r):
    half = p.gap_halfwidth
    if grid is None:  # resolve a default grid from the mass scale
        cutoff = w.support_cutoff if w is not None else 0.0
        kappa_floor = 0.35 * abs(p.m) * p.c / p.hbar
        grid = lattice.Grid1D.for_decay(kappa_floor, spacing=0.01 * p.hbar / (abs(p.m) * p.c),
                                        cutoff=cutoff)
    out = []
    for k in k_values:
        cap = min(0.98 * half, 0.9 * analytic.bulk_edge(k, p))
        box = (max(-cap, window[0]), min(cap, window[1])) if window else (-cap, cap)
        if box[0] >= box[1]:
            out.append(([], box))
            continue
        fm = lattice.assemble_fiber(k, p, bc, w=w, grid=grid, wilson_r=wilson_r)
        pairs = lattice.eig_in_gap(fm, box)
        out.append(([e for e, _ in pairs], box))
    return out


def _track_branches(k_values, per_sample, source, axis, lipschitz, eval_fn=None):
    """Greedy nearest-energy continuation of per-sample energy lists."""
    open_branches: list[dict] = []
    closed: list[dict] = []
    dk = np.diff(k_values)
    for i, (energies, caps) in enumerate(per_sample):
        energies = sorted(energies)
        step = dk[i - 1] if i > 0 else (dk[0] if dk.size else 1.0)
        taken = [False] * len(energies)
        survivors = []
        for br in open_branches:
            last_e = br["energy"][-1]
            slope = br["slope"]
            tol = _EXIT_SLACK * max(abs(slope), 0.5 * lipschitz) * abs(step)
            best_j, best_d = -1, math.inf
            for j, e in enumerate(energies):
                if taken[j]:
                    continue
                d = abs(e - last_e)
                if d < best_d:
                    best_j, best_d = j, d
            if best_j >= 0 and best_d <= tol:
                taken[best_j] = True
                e = energies[best_j]
                if len(br["energy"]) >= 1 and abs(step) > 0:
                    br["slope"] = (e - last_e) / step
                br["k"].append(k_values[i])
                br["energy"].append(e)
                br["caps"].append(caps)
                survivors.append(br)
            else:
                closed.append(br)
        open_branches = survivors
        for j, e in enumerate(energies):
            if not taken[j]:
                open_branches.append(
                    {"k": [k_values[i]], "energy": [e], "caps": [caps], "slope": lipschitz}
                )
    closed.extend(open_branches)
    branches = []
    for br in closed:
        branches.append(
            DispersionBranch(
                k2=np.asarray(br["k"]),
                energy=np.asarray(br["energy"]),
                source=source,
                in_gap=np.zeros(len(br["k"]), dtype=bool),  # filled by caller
                cap_lo=np.asarray([c[0] for c in br["caps"]]),
                cap_hi=np.asarray([c[1] for c in br["caps"]]),
                axis=axis,
                eval_fn=eval_fn,
            )
        )
    branches.sort(key=lambda b: (b.k2[0], b.energy[0]))
    return branches


def sweep_dispersion(
    p: PhysParams,
    bc: BoundaryParam,
    w: PerturbationSpec | None = None,
    k_range: tuple[float, float] | None = None,
    n_samples: int = 257,
    source: str = "analytic",
    window: tuple[float, float] | None = None,
    grid: lattice.Grid1D | None = None,
    wilson_r: float = 1.0,
) -> list[DispersionBranch]:
    """Sample in-gap eigenvalues over a momentum range and track branches.

    Emits a warning when a branch reaches the end of the range while still
    strictly inside the bulk gap (range too narrow for flow counting).
    """
    p.require_mass()
    if w is not None and source == "analytic":
        raise ValueError("the analytic source only describes the unperturbed system")
    if k_range is None:
        k_range = recommended_k_range(p, bc, w)
    k_values = np.linspace(k_range[0], k_range[1], n_samples)
    if source == "analytic":
        per_sample = _states_analytic(k_values, p, bc)

        def eval_fn(k):
            verdict = analytic.gap_eigenvalue(k, p, bc)
            return verdict.e_gap if verdict.has_gap_state else None

    elif source == "shooting":
        per_sample = _states_shooting(k_values, p, bc, w, window)
        eval_fn = None
    elif source == "discrete":
        per_sample = _states_discrete(k_values, p, bc, w, window, grid, wilson_r)
        eval_fn = None
    else:
        raise ValueError(f"unknown dispersion source {source!r}")

    lipschitz = p.hbar * p.c
    branches = _track_branches(k_values, per_sample, source, "k2", lipschitz, eval_fn)
    half = p.gap_halfwidth
    for br in branches:
        br.in_gap = np.abs(br.energy) < half
        ends_inside = (
            abs(br.energy[0]) < half - 1e-9 and br.k2[0] == k_values[0]
        ) or (abs(br.energy[-1]) < half - 1e-9 and br.k2[-1] == k_values[-1])
        if ends_inside:
            warnings.warn(
                f"branch still inside the gap at the k-range boundary "
                f"(k_range={k_range}); flow counts may be incomplete",
                stacklevel=2,
            )
    return branches


def _check_branch_ends(br: DispersionBranch, k_lo: float, k_hi: float, lipschitz: float):
    """Raise when a branch dies strictly inside its search window mid-range."""
    for end in (0, -1):
        k_end = br.k2[end]
        if k_end == k_lo or k_end == k_hi:
            continue
        e_end = br.energy[end]
        n = len(br.k2)
        step = abs(br.k2[1] - br.k2[0]) if n > 1 else 0.0
        slack = _EXIT_SLACK * lipschitz * step
        if br.cap_lo[end] + slack < e_end < br.cap_hi[end] - slack:
            raise BranchTrackingError(
                f"branch terminated at k={k_end}, E={e_end} strictly inside the "
                f"search window ({br.cap_lo[end]}, {br.cap_hi[end]}); tracking failure"
            )


def _refine_crossing(br: DispersionBranch, i: int, ref: float) -> float:
    k0, k1 = br.k2[i], br.k2[i + 1]
    e0, e1 = br.energy[i], br.energy[i + 1]
    if br.eval_fn is not None:
        a, b = k0, k1
        fa = e0 - ref
        for _ in range(100):
            if abs(b - a) <= 1e-12 * max(1.0, abs(a)):
                break
            mid = 0.5 * (a + b)
            e_mid = br.eval_fn(mid)
            if e_mid is None:
                break
            fm = e_mid - ref
            if fm == 0.0:
                return mid
            if fa * fm < 0.0:
                b = mid
            else:
                a, fa = mid, fm
        return 0.5 * (a + b)
    return k0 + (k1 - k0) * (ref - e0) / (e1 - e0)


def spectral_flow(
    branches: Sequence[DispersionBranch],
    reference_energy: float = 0.0,
    lipschitz: float = 1.0,
) -> FlowResult:
    """Net signed count of branch crossings through the reference energy."""
    ref = reference_energy
    if any(np.any(br.energy == ref) for br in branches):
        ref = ref + _REFERENCE_NUDGE  # deterministic nudge off the sample
    if branches:
        k_lo = min(br.k2[0] for br in branches)
        k_hi = max(br.k2[-1] for br in branches)
    crossings: list[tuple[float, int]] = []
    for br in branches:
        _check_branch_ends(br, k_lo, k_hi, lipschitz)
        signs = np.sign(br.energy - ref)
        for i in range(len(signs) - 1):
            if signs[i] == 0.0 or signs[i + 1] == 0.0 or signs[i] == signs[i + 1]:
                continue
            direction = 1 if signs[i + 1] > signs[i] else -1
            k_star = _refine_crossing(br, i, ref)
            crossings.append((float(k_star), direction))
    crossings.sort(key=lambda c: c[0])
    return FlowResult(
        flow=sum(d for _, d in crossings), crossings=crossings, reference_energy=ref
    )


def stability_scan(
    p: PhysParams,
    bc: BoundaryParam,
    w_family: Sequence[PerturbationSpec],
    n_samples: int = 129,
    reference_energy: float = 0.0,
    margin: float = 0.05,
) -> list[StabilityRecord]:
    """Spectral flow under each perturbation, asserted unchanged inside the
    ||W|| < (1 - margin) |m| c^2 hypothesis."""
    p.require_mass()
    baseline = spectral_flow(
        sweep_dispersion(p, bc, n_samples=n_samples, source="analytic"),
        reference_energy,
        lipschitz=p.hbar * p.c,
    ).flow
    records = []
    for w in w_family:
        branches = sweep_dispersion(p, bc, w, n_samples=n_samples, source="shooting")
        flow = spectral_flow(branches, reference_energy, lipschitz=p.hbar * p.c).flow
        unchanged = flow == baseline
        within = w.sup_norm < (1.0 - margin) * p.gap_halfwidth
        if within and not unchanged:
            raise RuntimeError(
                f"flow changed ({baseline} -> {flow}) under a perturbation with "
                f"||W|| = {w.sup_norm} < {(1.0 - margin) * p.gap_halfwidth}"
            )
        records.append(
            StabilityRecord(
                sup_norm=w.sup_norm, flow=flow, unchanged=unchanged, within_hypothesis=within
            )
        )
    return records
