"""Command-line front end: reproducible tables and plot data.

Commands: dispersion | gapstate | flow | conductivity | perturb-scan |
bloch | selftest.  Curves are written as RFC-4180 style CSV (header row,
LF endings, 17 significant digits); summaries as JSON with sorted keys.
A JSON file passed via --config overrides the command-line flags.  Exit
codes: 0 ok, 1 usage error, 2 numerical-check failure.

The DIRAC_EDGE_THREADS environment variable caps the numba thread count;
BLAS threading is controlled by the usual OMP/OPENBLAS variables of the
host environment.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance, analytic, bloch, edge_current, flow, lattice, shooting
from .params import (
    BoundaryParam,
    EnergyWindow,
    PhysParams,
    SwitchFunction,
    SwitchProfile,
)
from .potentials import PeriodicPerturbation, random_perturbation

__all__ = ["main", "entrypoint", "build_parser"]

_USAGE_EXIT = 1
_CHECK_EXIT = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise _UsageError(message)


def _configure_threads():
    value = os.environ.get("DIRAC_EDGE_THREADS")
    if not value:
        return
    try:
        count = max(1, int(value))
    except ValueError:
        raise _UsageError(f"DIRAC_EDGE_THREADS={value!r} is not an integer")
    try:
        import numba

        numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def _parse_zeta(text: str) -> float:
    t = text.strip().lower()
    if t in {"inf", "+inf", "-inf", "infinity"}:
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise _UsageError(f"zeta must be a number or 'inf', got {text!r}")


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    try:
        lo_s, hi_s = text.split(":")
        return float(lo_s), float(hi_s)
    except ValueError:
        raise _UsageError(f"{what} must look like lo:hi, got {text!r}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(c) if isinstance(c, float) else c for c in row])


def _write_json(path: Path | None, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise _UsageError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise _UsageError(f"config file is not valid JSON: {exc}")
        if not isinstance(overrides, dict):
            raise _UsageError("config file must hold a JSON object")
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise _UsageError(f"config key {key!r} is not a flag of this command")
            setattr(args, attr, value)
    return args


def _physics(args) -> tuple[PhysParams, BoundaryParam]:
    try:
        p = PhysParams(m=float(args.m), hbar=float(args.hbar), c=float(args.c), e=float(args.e))
        p.require_mass()
    except ValueError as exc:
        raise _UsageError(str(exc))
    zeta = args.zeta if isinstance(args.zeta, (int, float)) else _parse_zeta(str(args.zeta))
    return p, BoundaryParam.from_zeta(zeta)


def _add_physics_flags(sp):
    sp.add_argument("--m", required=True, help="fermion mass (sign meaningful, nonzero)")
    sp.add_argument("--zeta", required=True, help="boundary parameter, a number or 'inf'")
    sp.add_argument("--hbar", default=1.0, type=float)
    sp.add_argument("--c", default=1.0, type=float)
    sp.add_argument("--e", default=1.0, type=float)
    sp.add_argument("--config", default=None, help="JSON file whose entries override flags")


def _zeta_json(bc: BoundaryParam):
    return "inf" if bc.is_infinite else bc.zeta


def build_parser() -> _Parser:
    parser = _Parser(prog="dirac-edge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("dispersion", help="bulk edges and in-gap branch over k2")
    _add_physics_flags(sp)
    sp.add_argument("--k-range", default=None, help="lo:hi momentum range")
    sp.add_argument("--n", default=257, type=int, help="number of k2 samples")
    sp.add_argument("--source", default="analytic", choices=["analytic", "shooting", "discrete"])
    sp.add_argument("--out", default="dispersion.csv")
    sp.add_argument("--mirror", action="store_true",
                    help="also write the (-m, -zeta) system to <out>_mirror.csv")

    sp = sub.add_parser("gapstate", help="one bound edge state, closed form")
    _add_physics_flags(sp)
    sp.add_argument("--k2", required=True, type=float)
    sp.add_argument("--source", default="analytic", choices=["analytic", "shooting"])
    sp.add_argument("--out", default=None, help="JSON path (stdout when omitted)")

    sp = sub.add_parser("flow", help="spectral flow through a reference energy")
    _add_physics_flags(sp)
    sp.add_argument("--k-range", default=None)
    sp.add_argument("--n", default=257, type=int)
    sp.add_argument("--source", default="analytic", choices=["analytic", "shooting", "discrete"])
    sp.add_argument("--reference", default=0.0, type=float)
    sp.add_argument("--out", default="flow.json")
    sp.add_argument("--out-branches", default="flow_branches.csv")

    sp = sub.add_parser("conductivity", help="edge conductivity by all methods")
    _add_physics_flags(sp)
    sp.add_argument("--window", default=None, help="lo:hi energy window inside the gap")
    sp.add_argument("--n", default=257, type=int)
    sp.add_argument("--source", default="analytic", choices=["analytic", "shooting"])
    sp.add_argument("--tolerance", default=None, type=float,
                    help="cross-method disagreement tolerance (default 1e-6 analytic, 1e-3 shooting)")
    sp.add_argument("--out", default="conductivity.json")

    sp = sub.add_parser("perturb-scan", help="flow stability under seeded perturbations")
    _add_physics_flags(sp)
    sp.add_argument("--n-perturbations", default=10, type=int)
    sp.add_argument("--max-norm", default=0.8, type=float,
                    help="largest sup norm, as a fraction of |m| c^2")
    sp.add_argument("--cutoff", default=2.5, type=float, help="x1 support cutoff")
    sp.add_argument("--seed", default=7, type=int)
    sp.add_argument("--n", default=97, type=int, help="k2 samples per sweep")
    sp.add_argument("--out", default="perturb_scan.json")

    sp = sub.add_parser("bloch", help="reduced-zone bands and flow for periodic W")
    _add_physics_flags(sp)
    sp.add_argument("--period", default=2.0 * math.pi, type=float)
    sp.add_argument("--n-modes", default=16, type=int)
    sp.add_argument("--n-x1", default=256, type=int)
    sp.add_argument("--h1", default=0.08, type=float)
    sp.add_argument("--n-theta", default=33, type=int)
    sp.add_argument("--window", default=None, help="lo:hi tracking window inside the gap")
    sp.add_argument("--w-config", default=None,
                    help="JSON file with a periodic perturbation description")
    sp.add_argument("--reference", default=0.0, type=float)
    sp.add_argument("--out", default="bloch.json")
    sp.add_argument("--out-bands", default="bloch_bands.csv")

    sp = sub.add_parser("selftest", help="run the acceptance criteria")
    sp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    sp.add_argument("--config", default=None, help="JSON file whose entries override flags")

    return parser


def _cmd_dispersion(args) -> int:
    p, bc = _physics(args)
    k_range = _parse_pair(args.k_range, "--k-range") if args.k_range else None
    systems = [(p, bc, Path(args.out))]
    if args.mirror:
        out = Path(args.out)
        mirror_path = out.with_name(out.stem + "_mirror" + out.suffix)
        systems.append((PhysParams(m=-p.m, hbar=p.hbar, c=p.c, e=p.e),
                        BoundaryParam.from_zeta(-bc.zeta if not bc.is_infinite else math.inf),
                        mirror_path))
    for p_i, bc_i, path in systems:
        branches = flow.sweep_dispersion(
            p_i, bc_i, k_range=k_range, n_samples=args.n, source=args.source
        )
        ks = np.linspace(*(k_range or flow.recommended_k_range(p_i, bc_i)), args.n)
        by_k: dict[float, list[tuple[float, int]]] = {}
        for bid, br in enumerate(branches):
            for k, e in zip(br.k2, br.energy):
                by_k.setdefault(float(k), []).append((float(e), bid))
        rows = []
        for k in ks:
            eb = analytic.bulk_edge(float(k), p_i)
            entries = by_k.get(float(k), [(None, None)])
            for e, bid in entries:
                rows.append([
                    float(k), eb, -eb,
                    e if e is not None else "",
                    bid if bid is not None else "",
                ])
        _write_csv(path, ["k2", "E_b_plus", "E_b_minus", "E_g", "branch_id"], rows)
        print(f"wrote {path} ({len(rows)} rows, {len(branches)} branch(es))")
    return 0


def _cmd_gapstate(args) -> int:
    p, bc = _physics(args)
    k2 = float(args.k2)
    verdict = analytic.gap_eigenvalue(k2, p, bc)
    payload = {
        "m": p.m,
        "zeta": _zeta_json(bc),
        "k2": k2,
        "E_bulk": verdict.e_bulk,
        "has_gap_state": verdict.has_gap_state,
    }
    if verdict.has_gap_state:
        state = analytic.gap_state(k2, p, bc)
        payload.update(
            energy=state.energy,
            kappa=state.kappa,
            norm=state.norm,
            spinor_v=[state.spinor.v.real, state.spinor.v.imag],
            spinor_w=[state.spinor.w.real, state.spinor.w.imag],
            sigma2=analytic.current_expectation(state, p, bc),
        )
        if args.source == "shooting":
            half = p.gap_halfwidth
            match = shooting.match_boundary(k2, p, bc, window=(-0.95 * half, 0.95 * half))
            if match is None:
                raise RuntimeError("shooting cross-check failed to find the state")
            num = shooting.numeric_gap_state(match, k2, p, bc)
            payload.update(
                energy_shooting=match.energy,
                residual_shooting=match.residual,
                kappa_shooting=num.kappa,
                sigma2_quadrature=shooting.sigma2_expectation(match.energy, k2, p),
            )
    _write_json(Path(args.out) if args.out else None, payload)
    return 0


def _cmd_flow(args) -> int:
    p, bc = _physics(args)
    k_range = _parse_pair(args.k_range, "--k-range") if args.k_range else None
    branches = flow.sweep_dispersion(
        p, bc, k_range=k_range, n_samples=args.n, source=args.source
    )
    result = flow.spectral_flow(branches, args.reference, lipschitz=p.hbar * p.c)
    rows = []
    for bid, br in enumerate(branches):
        for k, e, ig in zip(br.k2, br.energy, br.in_gap):
            rows.append([float(k), float(e), bid, int(ig)])
    _write_csv(Path(args.out_branches), ["k2", "E", "branch_id", "in_gap"], rows)
    _write_json(
        Path(args.out),
        {
            "m": p.m,
            "zeta": _zeta_json(bc),
            "source": args.source,
            "reference_energy": result.reference_energy,
            "flow": result.flow,
            "crossings": [[k, d] for k, d in result.crossings],
            "n_branches": len(branches),
        },
    )
    print(f"flow = {result.flow} ({len(result.crossings)} crossing(s)); wrote {args.out}")
    return 0


def _cmd_conductivity(args) -> int:
    p, bc = _physics(args)
    half = p.gap_halfwidth
    window = (
        EnergyWindow(*_parse_pair(args.window, "--window"))
        if args.window
        else EnergyWindow(-0.4 * half, 0.4 * half)
    )
    try:
        window.require_inside_gap(p)
    except ValueError as exc:
        raise _UsageError(str(exc))
    tol = args.tolerance if args.tolerance is not None else (
        1e-6 if args.source == "analytic" else 1e-3
    )
    sigma_analytic = analytic.sigma_edge_analytic(p, bc)
    sweep_source = args.source
    branches = flow.sweep_dispersion(p, bc, n_samples=args.n, source=sweep_source)
    flow_result = flow.spectral_flow(branches, lipschitz=p.hbar * p.c)
    direct = edge_current.edge_current_direct(
        p, bc, window=window, source=args.source, branches=branches
    )
    switch = edge_current.edge_current_switch(
        p,
        bc,
        switch=SwitchFunction(SwitchProfile.SMOOTHSTEP_CUBIC, window),
        source=args.source,
        branches=branches,
    )
    rows = [
        ("sigma_e (closed form)", float(sigma_analytic)),
        ("spectral flow", float(flow_result.flow)),
        ("direct integral", direct.sigma_e),
        ("switch function", switch.sigma_e),
    ]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {value:+.9f}")
    agree = all(abs(value - sigma_analytic) < tol for _, value in rows)
    payload = {
        "m": p.m,
        "zeta": _zeta_json(bc),
        "window": [window.lo, window.hi],
        "source": args.source,
        "sigma_bulk": analytic.sigma_bulk(p),
        "sigma_e": sigma_analytic,
        "flow": flow_result.flow,
        "sigma_e_direct": direct.sigma_e,
        "sigma_e_switch": switch.sigma_e,
        "tolerance": tol,
        "agree": agree,
        "methods": [
            edge_current.to_summary(direct, p, bc),
            edge_current.to_summary(switch, p, bc),
        ],
    }
    _write_json(Path(args.out), payload)
    if not agree:
        print("cross-check FAILED: methods disagree beyond tolerance", file=sys.stderr)
        return _CHECK_EXIT
    return 0


def _cmd_perturb_scan(args) -> int:
    p, bc = _physics(args)
    rng = np.random.default_rng(args.seed)
    norms = np.linspace(args.max_norm / args.n_perturbations, args.max_norm,
                        args.n_perturbations) * p.gap_halfwidth
    family = [
        random_perturbation(rng, target_norm=float(t), support_cutoff=args.cutoff)
        for t in norms
    ]
    try:
        records = flow.stability_scan(p, bc, family, n_samples=args.n)
        violated = False
    except RuntimeError as exc:
        print(f"stability violation: {exc}", file=sys.stderr)
        records, violated = [], True
    payload = {
        "m": p.m,
        "zeta": _zeta_json(bc),
        "seed": args.seed,
        "n_perturbations": args.n_perturbations,
        "records": [
            {
                "sup_norm": r.sup_norm,
                "flow": r.flow,
                "unchanged": r.unchanged,
                "within_hypothesis": r.within_hypothesis,
            }
            for r in records
        ],
        "all_unchanged": bool(records) and all(r.unchanged for r in records),
        "violated": violated,
    }
    _write_json(Path(args.out), payload)
    for r in records:
        print(f"||W|| = {r.sup_norm:8.4f}  flow = {r.flow:+d}  unchanged = {r.unchanged}")
    return _CHECK_EXIT if violated else 0


def _cmd_bloch(args) -> int:
    p, bc = _physics(args)
    half = p.gap_halfwidth
    window = (
        EnergyWindow(*_parse_pair(args.window, "--window"))
        if args.window
        else EnergyWindow(-0.6 * half, 0.6 * half)
    )
    bg = bloch.BlochGrid(
        grid_x1=lattice.Grid1D(spacing=args.h1, n_sites=args.n_x1),
        period=args.period,
        n_modes=args.n_modes,
        n_theta=args.n_theta,
    )
    w = None
    if args.w_config:
        cfg = json.loads(Path(args.w_config).read_text(encoding="utf-8"))
        cfg.setdefault("period", args.period)
        w = PeriodicPerturbation.from_config(cfg)
    bands = bloch.bloch_bands(p, bc, w, bg, window)
    result = bloch.bloch_spectral_flow(bands, args.reference)
    rows = []
    for bid, br in enumerate(bands.branches):
        for theta, e in zip(br.k2, br.energy):
            rows.append([float(theta), float(e), bid])
    _write_csv(Path(args.out_bands), ["theta", "E", "branch_id"], rows)
    _write_json(
        Path(args.out),
        {
            "m": p.m,
            "zeta": _zeta_json(bc),
            "period": args.period,
            "n_modes": args.n_modes,
            "n_x1": args.n_x1,
            "h1": args.h1,
            "n_theta": args.n_theta,
            "window": [window.lo, window.hi],
            "sup_norm": w.sup_norm if w is not None else 0.0,
            "reference_energy": result.reference_energy,
            "flow": result.flow,
            "crossings": [[t, d] for t, d in result.crossings],
        },
    )
    print(f"reduced-zone flow = {result.flow}; wrote {args.out} and {args.out_bands}")
    return 0


def _cmd_selftest(args) -> int:
    indices = None
    if args.only:
        try:
            indices = [int(tok) for tok in args.only.split(",") if tok.strip()]
        except ValueError:
            raise _UsageError(f"--only expects comma-separated integers, got {args.only!r}")
        unknown = set(indices) - {i for i, _, _, _ in acceptance.CRITERIA}
        if unknown:
            raise _UsageError(f"unknown criterion number(s): {sorted(unknown)}")
    results = acceptance.run(indices=indices)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return _CHECK_EXIT if failed else 0


_COMMANDS = {
    "dispersion": _cmd_dispersion,
    "gapstate": _cmd_gapstate,
    "flow": _cmd_flow,
    "conductivity": _cmd_conductivity,
    "perturb-scan": _cmd_perturb_scan,
    "bloch": _cmd_bloch,
    "selftest": _cmd_selftest,
}


_PAIR_FLAGS = {"--k-range", "--window"}


def _merge_pair_flags(argv: list[str]) -> list[str]:
    # argparse refuses values like "-3:3"; fold them into --flag=value form
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _PAIR_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = _merge_pair_flags(list(argv))
    try:
        _configure_threads()
        args = parser.parse_args(argv)
        args = _apply_config(args)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _CHECK_EXIT


def entrypoint() -> None:  # console script target
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
