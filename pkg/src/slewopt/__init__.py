"""Attitude slew planning for rotor-actuated satellites.

Sequential convex programming over a gyrostat model for minimum-time slews
and minimum-effort multi-target pointing, an in-house second-order cone
solver, a slew-time atlas, orbit and ground-target geometry for building
pointing schedules, and an LQR tracking simulation.
"""

__version__ = "0.1.0"
