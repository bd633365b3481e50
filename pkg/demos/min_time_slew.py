"""Minimum-time slews about principal and oblique axes.

Solves rest-to-rest slews with the default SCP settings, compares the
principal-axis times with the bang-bang double-integrator estimate, checks
how much of each torque history sits on the limit and replays the torques
through the nonlinear dynamics.

    python demos/min_time_slew.py [out_dir]
"""

import math
import sys
from pathlib import Path

import numpy as np

from slewopt.atlas import analytic_oracle, slew_energy
from slewopt.dynamics import IQ, IW, SatelliteParams, replay, write_trajectory_csv
from slewopt.quaternion import IDENTITY, angle_between, axis_angle_to_quaternion
from slewopt.scp import solve_min_time


def main(out_dir="demo_out/min_time"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = SatelliteParams()
    print(f"{'axis':>10} {'deg':>5} {'t_f [s]':>9} {'oracle':>8} {'iters':>5} "
          f"{'saturated':>9} {'energy [J]':>10} {'replay [deg]':>12}")
    for name, axis, angle in [("x", (1, 0, 0), 60), ("x", (1, 0, 0), 120),
                              ("z", (0, 0, 1), 60), ("(1,1,1)", (1, 1, 1), 60)]:
        qf = axis_angle_to_quaternion(axis, math.radians(angle))
        res = solve_min_time(IDENTITY, qf, p)
        st = res.stack
        sat = np.mean(np.all(np.abs(st.U[1:-1]) >= 0.99 * p.u_max, axis=1))
        _, X, _ = replay(st.X[0], st.times, st.U, p)
        err = math.degrees(angle_between(X[-1, IQ], qf))
        oracle = (f"{analytic_oracle(name, math.radians(angle), p):8.3f}"
                  if name in "xyz" else f"{'':>8}")
        print(f"{name:>10} {angle:5d} {res.tf:9.3f} {oracle} {res.iterations:5d} "
              f"{100 * sat:8.1f}% {slew_energy(res, p):10.2f} {err:12.2e}")
        assert np.abs(X[-1, IW]).max() < 1e-3
        write_trajectory_csv(out / f"slew_{name.strip('()').replace(',', '')}_{angle}.csv",
                             st.times, st.X, st.U, p)
    print(f"trajectories written to {out}/")


if __name__ == "__main__":
    main(*sys.argv[1:])
