#!/usr/bin/env python3
"""Emit the fiber-spectrum curves (bulk edges plus in-gap branch, with the
mirrored (-m, -zeta) system) for a few representative boundary parameters.

Writes CSVs under out/spectrum/; plot k2 against E_b_plus, E_b_minus and
E_g to see the in-gap line meeting the bulk hyperbola.
"""

import pathlib
import sys

from dirac_edge.cli import main

CASES = [
    (1.0, 1.0),
    (1.0, 2.0),
    (1.0, 0.5),
    (1.0, 0.0),
    (1.0, -1.0),
]

out_dir = pathlib.Path("out/spectrum")
out_dir.mkdir(parents=True, exist_ok=True)

for m, zeta in CASES:
    name = f"m{m:+g}_zeta{zeta:+g}".replace("+", "p").replace("-", "n").replace(".", "_")
    code = main(
        [
            "dispersion",
            "--m", str(m),
            "--zeta", str(zeta),
            "--k-range", "-4:4",
            "--n", "401",
            "--out", str(out_dir / f"{name}.csv"),
            "--mirror",
        ]
    )
    if code != 0:
        sys.exit(code)
print(f"spectrum curves written under {out_dir}/")
