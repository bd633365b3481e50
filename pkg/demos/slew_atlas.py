"""A small slew atlas and the square-root time law.

Builds the principal-axis part of the atlas at five angles, fits
``T = a theta^b`` and ``E = c theta + d`` per axis and queries the atlas
between two arbitrary attitudes.

    python demos/slew_atlas.py [out_dir]
"""

import math
import sys
from pathlib import Path

from slewopt.atlas import (RotationGrid, build_atlas, eigenaxis_coefficient,
                           energy_slope_oracle, fit_models)
from slewopt.dynamics import SatelliteParams
from slewopt.quaternion import axis_angle_to_quaternion


def main(out_dir="demo_out/atlas"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = SatelliteParams()
    grid = RotationGrid([[1, 0, 0], [0, 1, 0], [0, 0, 1]], (10, 30, 60, 90, 120))
    atlas = build_atlas(grid, p)
    fits = fit_models(atlas)
    for i, name in enumerate("xyz"):
        f = fits[i]
        print(f"{name}-axis: T = {f.a:.3f} theta^{f.b:.4f} (R^2 {f.r2_time:.5f}),  "
              f"E = {f.c:.2f} theta + {f.d:.2f} (R^2 {f.r2_energy:.5f}),  "
              f"u_max^2 a^2 / Jr = {energy_slope_oracle(f.a, p):.2f}")
    print(f"eigenaxis planning coefficient: {eigenaxis_coefficient(p):.3f} s/rad^0.5")
    print(f"atlas monotonicity violations: {atlas.monotonicity_violations()}")

    q_a = axis_angle_to_quaternion([0.2, 0.1, 1.0], math.radians(15))
    q_b = axis_angle_to_quaternion([0.0, 0.3, 1.0], math.radians(70))
    ans = atlas.query(q_a, q_b)
    print(f"query q_a -> q_b: {ans['min_time']:.2f} s, {ans['energy']:.1f} J")
    (out / "atlas.json").write_text(atlas.dumps())
    print(f"atlas written to {out}/atlas.json")


if __name__ == "__main__":
    main(*sys.argv[1:])
