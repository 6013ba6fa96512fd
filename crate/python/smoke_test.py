#!/usr/bin/env python3
"""Smoke test for the ultraheat_py extension module.

Build the extension first:

    cargo build -p ultraheat-py --release

The script locates the compiled cdylib under target/, stages it under an
importable name and exercises the main surface end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path


def stage_module() -> None:
    root = Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libultraheat_py.so", "libultraheat_py.dylib", "ultraheat_py.dll")
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p ultraheat-py --release")
    stage = Path(tempfile.mkdtemp(prefix="ultraheat_py_"))
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    shutil.copy2(built, stage / f"ultraheat_py{suffix}")
    sys.path.insert(0, str(stage))


stage_module()

import ultraheat_py as uh  # noqa: E402


def close(a: float, b: float, tol: float = 1e-10) -> None:
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


# Expression language.
close(uh.eval_expr("exp(-t)*cos(pi*t)", 1.0), -math.exp(-1.0), 1e-15)
assert uh.parse_expr("1 + 0.5*sin(t)") == "(1.0 + (0.5 * sin(t)))"

# Two vertices joined by a unit edge.
edge = uh.TimeGraph(prime=2, vertices=2, weights=[(0, 1, "1")], window=(0.0, 2.0))
assert edge.level == 1
eigenvalues, modal = edge.spectrum(0.0)
close(eigenvalues[0], -2.0, 1e-12)
close(eigenvalues[1], 0.0, 1e-12)
adjacency, gamma, laplacian = edge.snapshot(0.3)
assert adjacency[0][1] == 1.0 and gamma == [1.0, 1.0] and laplacian[0][0] == -1.0

# Heat flow from a ball indicator over ln 2: (5/8, 3/8).
u0 = uh.Function.ball_indicator(edge, resolution=3, vertex=0)
result, diagnostics = edge.evolve("closed", 0.0, math.log(2.0), u0)
values = result.vertex_values()
close(values[0].real, 0.625, 1e-12)
close(values[1].real, 0.375, 1e-12)
assert diagnostics["method"] == "closed_form"
close(result.integral().real, u0.integral().real, 1e-12)

# The analytic kernel agrees.
probs = edge.heat_kernel(0.0, math.log(2.0), "0")
close(probs[0], 0.625, 1e-10)

# Time-dependent scalar family: closed form against the golden value.
p2t = uh.TimeGraph(prime=2, vertices=2, weights=[(0, 1, "1 + t/2")], window=(0.0, 2.0))
u0 = uh.Function.ball_indicator(p2t, resolution=3, vertex=0)
result, _ = p2t.evolve("closed", 0.0, 1.0, u0)
close(result.vertex_values()[0].real, 0.5 * (1.0 + math.exp(-2.5)), 1e-12)
close(p2t.survival_probability(0.0, 1.0, 0), math.exp(-1.25), 1e-12)
gap = p2t.closed_vs_trotter_gap(0.0, 1.0, u0, steps=256)
assert gap < 2e-3, gap

# Boundary eigenvalues on the complete triangle.
k3 = uh.TimeGraph(
    prime=2,
    vertices=3,
    weights=[(0, 1, "1"), (0, 2, "1"), (1, 2, "1")],
    window=(0.0, 1.0),
)
close(k3.gamma_hat(["0", "1"], 0.0), 0.25, 1e-15)
report = k3.boundary_report(["0", "1"], 0.0, resolution=4)
close(report["graph_dirichlet"], 0.5, 1e-12)
assert report["gamma_hat_lt_graph_dirichlet"] is True

# A short Monte-Carlo run cross-validates the kernel.
sim = edge.simulate(0.0, math.log(2.0), "0", paths=20000, seed=7)
assert sim["tv_distance"] <= 0.03, sim["tv_distance"]
assert abs(sim["survival_atom"] - 0.5) <= 4.0 * sim["survival_sigma"] + 1e-9

# Cells round-trip through Function construction.
f = uh.Function.from_cells(edge, 3, [complex(v, 0.0) for v in (1.0, 0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0)])
assert f.norm() > 0.0
assert len(f.cells()) == 8
csv = f.to_csv()
assert csv.startswith("kind,vertex,scale,center_digits,j,re,im")

print("smoke test passed")
