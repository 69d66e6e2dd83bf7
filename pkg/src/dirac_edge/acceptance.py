"""End-to-end verification drivers: one callable per release criterion.

Each criterion returns a CriterionResult instead of raising, so the whole
battery can run to completion and report one pass/fail line per item (the
pytest wrapper and the CLI selftest both consume this module).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import analytic, bloch, edge_current, flow, lattice, shooting
from .params import (
    BoundaryParam,
    EnergyWindow,
    PhysParams,
    SwitchFunction,
    SwitchProfile,
    boundary_residual,
    z_from_zeta,
    zeta_from_z,
)
from .potentials import PeriodicPerturbation, random_perturbation

__all__ = ["CriterionResult", "CRITERIA", "run"]

ZETA_GRID = (-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0, math.inf)
MASS_GRID = (-2.0, -1.0, 1.0, 2.0)


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    seconds: float


def _expected_sigma(m: float, zeta: float) -> int:
    if math.isinf(zeta) or m * zeta <= 0.0:
        return 0
    return 1 if m > 0 else -1


def _criterion_1() -> tuple[bool, str]:
    """Conductivity table over the (m, zeta) grid, four methods, exact values."""
    worst = 0.0
    for m in MASS_GRID:
        p = PhysParams(m=m)
        window = EnergyWindow(-0.4 * abs(m), 0.4 * abs(m))
        g = SwitchFunction(SwitchProfile.SMOOTHSTEP_CUBIC, window)
        for zeta in ZETA_GRID:
            bc = BoundaryParam.from_zeta(zeta)
            expected = _expected_sigma(m, zeta)
            if analytic.sigma_edge_analytic(p, bc) != expected:
                return False, f"analytic sigma wrong at m={m}, zeta={zeta}"
            branches = flow.sweep_dispersion(p, bc, source="analytic")
            fl = flow.spectral_flow(branches, lipschitz=p.hbar * p.c).flow
            if fl != expected:
                return False, f"flow {fl} != {expected} at m={m}, zeta={zeta}"
            d = edge_current.edge_current_direct(p, bc, window=window, branches=branches)
            s = edge_current.edge_current_switch(p, bc, switch=g, branches=branches)
            err = max(abs(d.sigma_e - expected), abs(s.sigma_e - expected))
            worst = max(worst, err)
            if err >= 1e-6:
                return False, f"integral sigma off by {err:.2e} at m={m}, zeta={zeta}"
    return True, f"32 parameter points, 4 methods; worst integral error {worst:.2e}"


def _random_admissible(rng):
    m = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
    zeta = math.copysign(math.exp(rng.uniform(math.log(0.3), math.log(3.0))), m)
    e_target = rng.uniform(-0.8, 0.8) * abs(m)
    k2 = ((1.0 + zeta**2) * e_target - (1.0 - zeta**2) * m) / (2.0 * zeta)
    return PhysParams(m=m), BoundaryParam.from_zeta(zeta), k2


def _criterion_2() -> tuple[bool, str]:
    """Shooting solver against the closed form on 200 random admissible draws."""
    rng = np.random.default_rng(2024)
    worst_e, worst_ov = 0.0, 0.0
    for i in range(200):
        p, bc, k2 = _random_admissible(rng)
        e_gap = analytic.gap_eigenvalue(k2, p, bc).e_gap
        half = p.gap_halfwidth
        match = shooting.match_boundary(k2, p, bc, window=(-0.9 * half, 0.9 * half))
        if match is None:
            return False, f"draw {i}: no root found (m={p.m}, zeta={bc.zeta}, k2={k2})"
        err = abs(match.energy - e_gap)
        worst_e = max(worst_e, err)
        if err >= 1e-7:
            return False, f"draw {i}: |E_shoot - E_g| = {err:.2e} >= 1e-7"
        state = shooting.numeric_gap_state(match, k2, p, bc)
        exact = analytic.gap_state(k2, p, bc)
        overlap = abs(np.vdot(state.spinor.as_array(), exact.spinor.as_array())) / (
            state.spinor.norm() * exact.spinor.norm()
        )
        worst_ov = max(worst_ov, 1.0 - overlap)
        if overlap <= 1.0 - 1e-8:
            return False, f"draw {i}: spinor overlap {overlap} <= 1 - 1e-8"
    return True, f"200 draws; worst |dE| {worst_e:.2e}, worst overlap defect {worst_ov:.2e}"


# (m, zeta, E-target as a fraction of |m| c^2); chosen so the O(h) Wilson bias
# (h/2) kappa^2 |1 - zeta^2|/(1 + zeta^2) stays below the 5e-3 budget at h = 0.01
_MATRIX_GRID = [
    (1.0, 2.0, -0.38), (1.0, 2.0, -0.1), (1.0, 2.0, -0.25), (1.0, 0.5, 0.38),
    (1.0, 0.5, 0.25), (1.0, 3.0, -0.55), (1.0, 0.7, 0.0), (1.0, 1.5, -0.3),
    (-1.0, -2.0, 0.38), (-1.0, -0.5, -0.38), (-1.0, -1.5, 0.0), (-1.0, -3.0, 0.55),
    (1.0, 1.2, 0.3), (1.0, 0.8, -0.5), (-1.0, -0.8, 0.25), (-1.0, -1.2, -0.2),
    (1.0, 1.0, 0.4), (-1.0, -1.0, -0.35), (1.0, 0.9, 0.6), (-1.0, -1.1, 0.0),
]


def _lattice_energy_near(p, bc, k2, e_gap, grid):
    import scipy.sparse.linalg as spla

    fm = lattice.assemble_fiber(k2, p, bc, grid=grid)
    vals, vecs = spla.eigsh(fm.matrix.tocsc(), k=2, sigma=e_gap, which="LM",
                            v0=np.ones(fm.dim))
    n, h = grid.n_sites, grid.spacing
    tail_start = int(0.9 * n)
    best = None
    for i in range(vals.size):
        psi = (fm.isometry @ vecs[:, i]).reshape(n, 2)
        tail = np.linalg.norm(psi[tail_start:]) / np.linalg.norm(psi)
        if tail < 1e-3 and (best is None or abs(vals[i] - e_gap) < abs(best - e_gap)):
            best = float(vals[i])
    return best


def _criterion_3() -> tuple[bool, str]:
    """Matrix model against the closed form; error halves when h halves."""
    ratios = []
    worst = 0.0
    for m, zeta, efrac in _MATRIX_GRID:
        p = PhysParams(m=m)
        bc = BoundaryParam.from_zeta(zeta)
        e_target = efrac * abs(m)
        k2 = ((1.0 + zeta**2) * e_target - (1.0 - zeta**2) * m) / (2.0 * zeta)
        e_gap = analytic.gap_eigenvalue(k2, p, bc).e_gap
        errs = []
        for h, n in ((0.01, 4000), (0.005, 8000)):
            e_num = _lattice_energy_near(p, bc, k2, e_gap, lattice.Grid1D(h, n))
            if e_num is None:
                return False, f"no localized state at m={m}, zeta={zeta}, k2={k2:.3f}, h={h}"
            errs.append(abs(e_num - e_gap))
        worst = max(worst, errs[0])
        if errs[0] >= 5e-3:
            return False, f"|E - E_g| = {errs[0]:.2e} >= 5e-3 at m={m}, zeta={zeta}"
        if errs[0] > 1e-8:  # zeta^2 = 1 rows are exact; no ratio to take there
            ratios.append(errs[0] / errs[1])
    med = float(np.median(ratios))
    if not (1.7 <= med <= 2.3):
        return False, f"median halving ratio {med:.2f} outside [1.7, 2.3]"
    return True, (
        f"20 cases at h=0.01: worst error {worst:.2e}; "
        f"median halving ratio {med:.2f} over {len(ratios)} inexact cases"
    )


def _criterion_4() -> tuple[bool, str]:
    """Slope law <sigma2> = 2 zeta/(1+zeta^2) and the Feynman-Hellmann check."""
    worst_a = worst_s = worst_fd = 0.0
    for m, zeta, efrac in [
        (1.0, 1.0, 0.3), (1.0, 2.0, 0.04), (1.0, 0.5, -0.3), (-1.0, -1.0, -0.4),
        (-1.0, -2.5, -0.3), (2.0, 1.5, -0.5), (-2.0, -0.7, 0.3), (1.0, 3.0, -0.2),
    ]:
        p = PhysParams(m=m)
        bc = BoundaryParam.from_zeta(zeta)
        e_target = efrac * abs(m)
        k2 = ((1.0 + zeta**2) * e_target - (1.0 - zeta**2) * m) / (2.0 * zeta)
        target = 2.0 * zeta / (1.0 + zeta**2)
        worst_a = max(
            worst_a,
            abs(analytic.current_expectation(analytic.gap_state(k2, p, bc), p, bc) - target),
        )
        half = p.gap_halfwidth
        match = shooting.match_boundary(k2, p, bc, window=(-0.9 * half, 0.9 * half))
        sigma2 = shooting.sigma2_expectation(match.energy, k2, p)
        worst_s = max(worst_s, abs(sigma2 - target))
        delta = 1e-3
        e_plus = shooting.match_boundary(
            k2 + delta, p, bc, window=(-0.95 * half, 0.95 * half)
        ).energy
        e_minus = shooting.match_boundary(
            k2 - delta, p, bc, window=(-0.95 * half, 0.95 * half)
        ).energy
        fd = (e_plus - e_minus) / (2.0 * delta * p.hbar * p.c)
        worst_fd = max(worst_fd, abs(fd - sigma2))
    ok = worst_a < 1e-6 and worst_s < 1e-4 and worst_fd < 1e-4
    return ok, (
        f"worst analytic {worst_a:.2e} (tol 1e-6), shooting {worst_s:.2e} (tol 1e-4), "
        f"finite-difference {worst_fd:.2e} (tol 1e-4)"
    )


def _criterion_5() -> tuple[bool, str]:
    """Window and switch-profile independence of sigma_e."""
    p = PhysParams(m=1.0)
    bc = BoundaryParam.from_zeta(2.0)
    branches = flow.sweep_dispersion(p, bc, source="analytic")
    sigmas = []
    for lo, hi in [(-0.5, 0.5), (-0.4, 0.45), (-0.3, 0.3), (-0.1, 0.25), (0.05, 0.2)]:
        sigmas.append(
            edge_current.edge_current_direct(
                p, bc, window=EnergyWindow(lo, hi), branches=branches
            ).sigma_e
        )
    for profile in SwitchProfile:
        sigmas.append(
            edge_current.edge_current_switch(
                p, bc, switch=SwitchFunction(profile, EnergyWindow(-0.5, 0.5)),
                branches=branches,
            ).sigma_e
        )
    spread = max(sigmas) - min(sigmas)
    return spread < 1e-6, f"5 windows + 3 profiles: spread {spread:.2e} (tol 1e-6)"


def _criterion_6() -> tuple[bool, str]:
    """Bulk conductivity as the mean of the two edge values."""
    for m in MASS_GRID:
        p = PhysParams(m=m)
        for zeta in (0.25, 0.5, 1.0, 2.0, 5.0):
            bc = BoundaryParam.from_zeta(zeta)
            if analytic.sigma_bulk_from_edge_mean(p, bc) != analytic.sigma_bulk(p):
                return False, f"mean relation fails at m={m}, zeta={zeta}"
    return True, "exact for all tested m and zeta != 0"


def _criterion_7() -> tuple[bool, str]:
    """Flow unchanged under 10 seeded perturbations with ||W|| <= 0.8 |m| c^2."""
    p = PhysParams(m=1.0)
    bc = BoundaryParam.from_zeta(1.0)
    rng = np.random.default_rng(7)
    family = [
        random_perturbation(rng, target_norm=norm, support_cutoff=2.5)
        for norm in np.linspace(0.08, 0.8, 10)
    ]
    records = flow.stability_scan(p, bc, family, n_samples=97)
    flows = [r.flow for r in records]
    if not all(f == 1 for f in flows):
        return False, f"flows {flows} not all +1"
    norms = ", ".join(f"{r.sup_norm:.2f}" for r in records)
    return True, f"flow = +1 for all 10 perturbations (norms {norms})"


def _criterion_8() -> tuple[bool, str]:
    """Reduced-zone flow at (m, zeta) = (1, 1), L = 2 pi, N = 256, M = 16."""
    p = PhysParams(m=1.0)
    bc = BoundaryParam.from_zeta(1.0)
    period = 2.0 * math.pi
    bg = bloch.BlochGrid(
        grid_x1=lattice.Grid1D(spacing=0.08, n_sites=256),
        period=period, n_modes=16, n_theta=33,
    )
    window = EnergyWindow(-0.6, 0.6)
    homogeneous = flow.spectral_flow(
        flow.sweep_dispersion(p, bc, source="analytic"), lipschitz=1.0
    ).flow
    bands0 = bloch.bloch_bands(p, bc, None, bg, window)
    flow0 = bloch.bloch_spectral_flow(bands0).flow
    if flow0 != 1 or flow0 != homogeneous:
        return False, f"W = 0 reduced-zone flow {flow0} != homogeneous {homogeneous}"
    w = PeriodicPerturbation.from_config(
        {
            "period": period,
            "support_cutoff": 3.0,
            "terms": [
                {
                    "target": "v",
                    "x1": {"kind": "bump", "center": 1.0, "width": 1.0, "amplitude": 1.0},
                    "harmonic": 1,
                    "amplitude": 1.0,
                },
                {
                    "target": "m1",
                    "x1": {"kind": "bump", "center": 1.2, "width": 0.9, "amplitude": 1.0},
                    "harmonic": 1,
                    "amplitude": 0.5,
                    "phase": 0.7,
                },
            ],
        }
    )
    w = w.scaled(0.3 / w.sup_norm)
    bands_w = bloch.bloch_bands(p, bc, w, bg, window)
    flow_w = bloch.bloch_spectral_flow(bands_w).flow
    if flow_w != 1:
        return False, f"flow {flow_w} != 1 under the periodic perturbation"
    return True, f"W=0 flow {flow0} == homogeneous; ||W||=0.3 preserves it"


def _criterion_9() -> tuple[bool, str]:
    """Structural invariants: Hermiticity, boundary residuals, z round trip."""
    grid = lattice.Grid1D(spacing=0.02, n_sites=1200)
    worst_h = 0.0
    for m, zeta, k2 in [(1.0, 1.0, 0.3), (1.0, 2.0, -0.5), (-1.0, -0.5, 0.2)]:
        fm = lattice.assemble_fiber(k2, PhysParams(m=m), BoundaryParam.from_zeta(zeta), grid=grid)
        worst_h = max(worst_h, fm.hermiticity_defect())
    bg = bloch.BlochGrid(
        grid_x1=lattice.Grid1D(spacing=0.1, n_sites=128),
        period=2.0 * math.pi, n_modes=16, n_theta=9,
    )
    w = PeriodicPerturbation.from_functions(
        v=lambda x1, x2: 0.1 * np.exp(-((np.asarray(x1) - 1.0) ** 2)) * np.cos(x2) * (np.asarray(x1) < 3.0),
        period=2.0 * math.pi, support_cutoff=3.0,
    )
    bm = bloch.assemble_bloch(0.4, PhysParams(m=1.0), BoundaryParam.from_zeta(1.0), w, bg)
    worst_h = max(worst_h, bm.hermiticity_defect())
    if worst_h >= 1e-13:
        return False, f"Hermiticity defect {worst_h:.2e} >= 1e-13"

    worst_res = worst_cur = 0.0
    for m, zeta, k2 in [(1.0, 1.0, 0.3), (1.0, 2.0, 0.8), (-1.0, -0.5, 0.1), (1.0, 0.5, -0.2)]:
        p = PhysParams(m=m)
        bc = BoundaryParam.from_zeta(zeta)
        state = analytic.gap_state(k2, p, bc)
        worst_res = max(worst_res, boundary_residual(state.spinor, bc))
        worst_cur = max(worst_cur, abs(state.spinor.normal_current()))
        half = p.gap_halfwidth
        match = shooting.match_boundary(k2, p, bc, window=(-0.9 * half, 0.9 * half))
        num = shooting.numeric_gap_state(match, k2, p, bc)
        worst_res = max(worst_res, boundary_residual(num.spinor, bc))
        worst_cur = max(worst_cur, abs(num.spinor.normal_current()))
    if worst_res >= 1e-6:
        return False, f"boundary residual {worst_res:.2e} >= 1e-6"
    if worst_cur >= 1e-9:
        return False, f"boundary normal current {worst_cur:.2e} >= 1e-9"

    rng = np.random.default_rng(99)
    worst_rt = 0.0
    for phi in rng.uniform(-math.pi, math.pi, size=1000):
        z = complex(math.cos(phi), math.sin(phi))
        worst_rt = max(worst_rt, abs(z_from_zeta(zeta_from_z(z)) - z))
    if worst_rt >= 1e-10:
        return False, f"z round trip error {worst_rt:.2e} >= 1e-10"
    return True, (
        f"Hermiticity {worst_h:.1e}; residual {worst_res:.1e}; "
        f"normal current {worst_cur:.1e}; round trip {worst_rt:.1e}"
    )


# (index, name, callable, runtime budget in seconds; None = no stated bound)
CRITERIA: list[tuple[int, str, Callable[[], tuple[bool, str]], float | None]] = [
    (1, "conductivity table (4 methods, 32 parameter points)", _criterion_1, 5.0),
    (2, "shooting solver vs closed form (200 random draws)", _criterion_2, 30.0),
    (3, "matrix model vs closed form (20 cases, h-halving)", _criterion_3, 120.0),
    (4, "slope law and Feynman-Hellmann checks", _criterion_4, None),
    (5, "window and switch-profile independence", _criterion_5, None),
    (6, "bulk conductivity as edge mean", _criterion_6, None),
    (7, "flow stability under 10 seeded perturbations", _criterion_7, 120.0),
    (8, "reduced-zone flow, with and without periodic W", _criterion_8, 600.0),
    (9, "structural invariants", _criterion_9, None),
]


def run(indices: Iterable[int] | None = None, stream=print) -> list[CriterionResult]:
    """Run the requested criteria (all by default), one report line each."""
    wanted = set(indices) if indices is not None else {i for i, _, _, _ in CRITERIA}
    results = []
    for index, name, fn, budget in CRITERIA:
        if index not in wanted:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashed criterion is a failed criterion
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        seconds = time.perf_counter() - t0
        if passed and budget is not None and seconds > budget:
            passed = False
            detail += f"; runtime {seconds:.1f}s exceeds the {budget:.0f}s budget"
        results.append(CriterionResult(index, name, passed, detail, seconds))
        if stream is not None:
            status = "PASS" if passed else "FAIL"
            stream(f"criterion {index} [{status}] {name} ({seconds:.1f}s): {detail}")
    return results
