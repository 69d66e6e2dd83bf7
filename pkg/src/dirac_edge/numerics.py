"""Scalar quadrature and root-finding helpers shared by the solvers."""

from __future__ import annotations

import math
from typing import Callable, Sequence

__all__ = ["adaptive_simpson", "bisect_root", "sign_change_brackets"]


def _simpson_panel(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = 40,
) -> float:
    """Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson_panel(f, a, fa, b, fb)

    def recurse(a, fa, b, fb, m, fm, whole, tol, depth):
        lm, flm, left = _simpson_panel(f, a, fa, m, fm)
        rm, frm, right = _simpson_panel(f, m, fm, b, fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return recurse(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) + recurse(
            m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1
        )

    return recurse(a, fa, b, fb, m, fm, whole, tol, max_depth)


def sign_change_brackets(xs: Sequence[float], fs: Sequence[float]) -> list[tuple[int, int]]:
    """Index pairs (i, i+1) where fs changes sign strictly (both values finite)."""
    out = []
    for i in range(len(fs) - 1):
        a, b = fs[i], fs[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b < 0.0:
            out.append((i, i + 1))
    return out


def bisect_root(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float | None = None,
    fb: float | None = None,
    xtol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Plain bisection for a sign change of f on [a, b]; returns the midpoint."""
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise ValueError("bisect_root requires a sign change on [a, b]")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if b - a <= xtol:
            return m
        fm = f(m)
        if fm == 0.0:
            return m
        if fa * fm < 0.0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)
