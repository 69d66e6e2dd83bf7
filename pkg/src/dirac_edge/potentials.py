"""Perturbation profiles W = m1(x) sigma3 + V(x) and their x2-periodic
generalizations.

Profiles are vectorized callables on x1 >= 0 with compact support: both are
clipped to exactly zero beyond the declared cutoff (construction rejects
profiles that have not decayed below 1e-12 there), so the constant tail of
the fiber Hamiltonian is exact.  The pointwise operator norm of
m1 sigma3 + V is max(|V + m1|, |V - m1|); the recorded sup norm is its
maximum over a dense probe grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PPoly

__all__ = [
    "PerturbationSpec",
    "PeriodicPerturbation",
    "profile_from_config",
    "bump_profile",
    "random_perturbation",
]

_SUPPORT_TOL = 1e-12
_PROBE_POINTS = 10_000


def bump_profile(center: float, width: float, amplitude: float) -> Callable:
    """Smooth bump with exact support [center - width, center + width]."""

    def f(x):
        x = np.asarray(x, dtype=float)
        t = (x - center) / width
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        ti = t[inside]
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - ti * ti))
        return out

    return f


def profile_from_config(cfg: Mapping | None) -> Callable | None:
    """Build a profile callable from a JSON-style descriptor.

    Supported kinds:
      {"kind": "ppoly", "knots": [...], "coeffs": [[...], ...]}
          piecewise polynomial on the knot intervals (scipy PPoly layout),
          zero beyond the last knot;
      {"kind": "samples", "x": [...], "y": [...], "interpolation": "linear"|"cubic"}
          interpolated samples, zero beyond the last node;
      {"kind": "bump", "center": c, "width": w, "amplitude": a}.
    """
    if cfg is None:
        return None
    kind = cfg["kind"]
    if kind == "bump":
        return bump_profile(float(cfg["center"]), float(cfg["width"]), float(cfg["amplitude"]))
    if kind == "ppoly":
        knots = np.asarray(cfg["knots"], dtype=float)
        coeffs = np.asarray(cfg["coeffs"], dtype=float)
        pp = PPoly(coeffs, knots, extrapolate=False)

        def f(x):
            out = pp(np.asarray(x, dtype=float))
            return np.nan_to_num(out, nan=0.0)

        return f
    if kind == "samples":
        xs = np.asarray(cfg["x"], dtype=float)
        ys = np.asarray(cfg["y"], dtype=float)
        interp = cfg.get("interpolation", "cubic")
        if interp == "cubic":
            spline = CubicSpline(xs, ys, extrapolate=False)

            def f(x):
                return np.nan_to_num(spline(np.asarray(x, dtype=float)), nan=0.0)

        else:

            def f(x):
                x = np.asarray(x, dtype=float)
                out = np.interp(x, xs, ys, left=0.0, right=0.0)
                return out

        return f
    raise ValueError(f"unknown profile kind {kind!r}")


def _pointwise_norm(m1_vals: np.ndarray, v_vals: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(v_vals + m1_vals), np.abs(v_vals - m1_vals))


def _eval(profile: Callable | None, x: np.ndarray) -> np.ndarray:
    if profile is None:
        return np.zeros_like(x)
    return np.asarray(profile(x), dtype=float)


@dataclass(frozen=True)
class PerturbationSpec:
    """x1-dependent perturbation m1(x1) sigma3 + V(x1), supported in [0, cutoff]."""

    m1: Callable | None
    v: Callable | None
    support_cutoff: float
    sup_norm: float

    @classmethod
    def from_profiles(
        cls,
        m1: Callable | Mapping | None = None,
        v: Callable | Mapping | None = None,
        support_cutoff: float = 1.0,
        probe_points: int = _PROBE_POINTS,
    ) -> "PerturbationSpec":
        if support_cutoff <= 0.0:
            raise ValueError("support cutoff must be positive")
        if isinstance(m1, Mapping):
            m1 = profile_from_config(m1)
        if isinstance(v, Mapping):
            v = profile_from_config(v)
        probe = np.linspace(0.0, support_cutoff, probe_points)
        m1_vals = _eval(m1, probe)
        v_vals = _eval(v, probe)
        beyond = np.linspace(support_cutoff, 2.0 * support_cutoff, 64)
        tail = _pointwise_norm(_eval(m1, beyond), _eval(v, beyond))
        if np.max(tail, initial=0.0) > _SUPPORT_TOL:
            raise ValueError(
                f"profiles exceed {_SUPPORT_TOL} beyond the declared cutoff {support_cutoff}"
            )
        sup = float(np.max(_pointwise_norm(m1_vals, v_vals), initial=0.0))
        return cls(m1=m1, v=v, support_cutoff=support_cutoff, sup_norm=sup)

    @classmethod
    def from_config(cls, cfg: Mapping) -> "PerturbationSpec":
        return cls.from_profiles(
            m1=cfg.get("m1"),
            v=cfg.get("v"),
            support_cutoff=float(cfg.get("support_cutoff", 1.0)),
        )

    def sample(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(m1, V) samples with the support clip applied exactly."""
        x = np.asarray(x, dtype=float)
        inside = x <= self.support_cutoff
        m1_vals = np.where(inside, _eval(self.m1, x), 0.0)
        v_vals = np.where(inside, _eval(self.v, x), 0.0)
        return m1_vals, v_vals

    def scaled(self, factor: float) -> "PerturbationSpec":
        m1, v = self.m1, self.v
        new_m1 = (lambda x: factor * _eval(m1, np.asarray(x, dtype=float))) if m1 else None
        new_v = (lambda x: factor * _eval(v, np.asarray(x, dtype=float))) if v else None
        return PerturbationSpec(
            m1=new_m1, v=new_v, support_cutoff=self.support_cutoff,
            sup_norm=abs(factor) * self.sup_norm,
        )


def random_perturbation(
    rng: np.random.Generator,
    target_norm: float,
    support_cutoff: float = 3.0,
    n_bumps: int = 2,
) -> PerturbationSpec:
    """Seeded random smooth perturbation rescaled to sup norm = target_norm."""

    def draw():
        terms = []
        for _ in range(n_bumps):
            center = rng.uniform(0.2, 0.7) * support_cutoff
            width = rng.uniform(0.15, 0.3) * support_cutoff
            width = min(width, center, support_cutoff - center)  # keep support inside
            amp = rng.uniform(-1.0, 1.0)
            terms.append(bump_profile(center, width, amp))
        return lambda x: sum(t(x) for t in terms)

    raw = PerturbationSpec.from_profiles(m1=draw(), v=draw(), support_cutoff=support_cutoff)
    if raw.sup_norm == 0.0:
        raise RuntimeError("degenerate random perturbation")
    return raw.scaled(target_norm / raw.sup_norm)


@dataclass(frozen=True)
class PeriodicPerturbation:
    """x2-periodic perturbation m1(x1, x2) sigma3 + V(x1, x2) with period L.

    The callables take broadcastable (x1, x2) arrays.  x1 support is compact
    (clipped at the cutoff as for PerturbationSpec); x2 dependence is
    L-periodic by construction of the factories.
    """

    m1: Callable | None
    v: Callable | None
    period: float
    support_cutoff: float
    sup_norm: float

    @classmethod
    def from_functions(
        cls,
        m1: Callable | None = None,
        v: Callable | None = None,
        period: float = 2.0 * math.pi,
        support_cutoff: float = 1.0,
        probe: tuple[int, int] = (400, 64),
    ) -> "PeriodicPerturbation":
        if period <= 0.0 or support_cutoff <= 0.0:
            raise ValueError("period and support cutoff must be positive")
        # support_cutoff = inf is allowed here (e.g. constant potentials); the
        # half-plane is truncated by the x1 grid anyway
        extent = support_cutoff if math.isfinite(support_cutoff) else 8.0 * period
        x1 = np.linspace(0.0, extent, probe[0])[:, None]
        x2 = np.linspace(0.0, period, probe[1], endpoint=False)[None, :]

        def ev(f):
            if f is None:
                return np.zeros((probe[0], probe[1]))
            return np.broadcast_to(np.asarray(f(x1, x2), dtype=float), (probe[0], probe[1]))

        m1_vals, v_vals = ev(m1), ev(v)
        for f in (m1, v):
            if f is not None:
                shifted = np.asarray(f(x1, x2 + period), dtype=float)
                base = np.asarray(f(x1, x2), dtype=float)
                if np.max(np.abs(shifted - base)) > 1e-10:
                    raise ValueError("perturbation is not periodic with the declared period")
        sup = float(np.max(_pointwise_norm(m1_vals, v_vals), initial=0.0))
        return cls(m1=m1, v=v, period=period, support_cutoff=support_cutoff, sup_norm=sup)

    @classmethod
    def from_config(cls, cfg: Mapping) -> "PeriodicPerturbation":
        """Build from {"period": L, "support_cutoff": X, "terms": [...]}.

        Each term is {"target": "v"|"m1", "x1": <profile descriptor>,
        "harmonic": n, "amplitude": a, "phase": phi} and contributes
        a * profile(x1) * cos(2 pi n x2 / L + phi).
        """
        period = float(cfg["period"])
        cutoff = float(cfg.get("support_cutoff", 1.0))
        terms: Sequence[Mapping] = cfg.get("terms", [])
        parts: dict[str, list] = {"v": [], "m1": []}
        for term in terms:
            target = term["target"]
            if target not in parts:
                raise ValueError(f"unknown perturbation target {target!r}")
            prof = profile_from_config(term["x1"])
            n = int(term.get("harmonic", 0))
            amp = float(term.get("amplitude", 1.0))
            phase = float(term.get("phase", 0.0))
            parts[target].append((prof, n, amp, phase))

        def build(entries):
            if not entries:
                return None

            def f(x1, x2):
                x1 = np.asarray(x1, dtype=float)
                x2 = np.asarray(x2, dtype=float)
                total = 0.0
                for prof, n, amp, phase in entries:
                    total = total + amp * prof(x1) * np.cos(
                        2.0 * math.pi * n * x2 / period + phase
                    )
                return total

            return f

        return cls.from_functions(
            m1=build(parts["m1"]), v=build(parts["v"]), period=period, support_cutoff=cutoff
        )

    def sample(self, x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(m1, V) on the grid x1 (axis 0) times x2 (axis 1), support-clipped."""
        x1 = np.asarray(x1, dtype=float)[:, None]
        x2 = np.asarray(x2, dtype=float)[None, :]
        shape = (x1.shape[0], x2.shape[1])

        def ev(f):
            if f is None:
                return np.zeros(shape)
            return np.broadcast_to(np.asarray(f(x1, x2), dtype=float), shape).copy()

        m1_vals, v_vals = ev(self.m1), ev(self.v)
        outside = (x1 > self.support_cutoff).repeat(shape[1], axis=1)
        m1_vals[outside] = 0.0
        v_vals[outside] = 0.0
        return m1_vals, v_vals

    def scaled(self, factor: float) -> "PeriodicPerturbation":
        m1, v = self.m1, self.v
        new_m1 = (lambda x1, x2: factor * np.asarray(m1(x1, x2), dtype=float)) if m1 else None
        new_v = (lambda x1, x2: factor * np.asarray(v(x1, x2), dtype=float)) if v else None
        return PeriodicPerturbation(
            m1=new_m1, v=new_v, period=self.period,
            support_cutoff=self.support_cutoff, sup_norm=abs(factor) * self.sup_norm,
        )
