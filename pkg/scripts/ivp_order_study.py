#!/usr/bin/env python3
"""Convergence study for the geodesic integrator.

Pure Euclidean dynamics integrate exactly (the acceleration vanishes), so
the observed order is measured on a Euclidean base with a vortex congestion
field, against a fine-grid reference.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from congeo.finsler import build_randers, congestion_vortex, euclidean_metric
from congeo.geodesic import GeodesicIvp, geodesic_ivp


def main():
    structure = build_randers(euclidean_metric(), congestion_vortex(0.0, 0.0, 0.8))
    x0, y0 = (-2.0, 0.15), (1.1, 0.2)
    ref = geodesic_ivp(structure, GeodesicIvp(x0, y0, steps=6400)).points[-1]
    print(f"{'steps':>6} {'endpoint error':>15} {'observed order':>15}")
    prev = None
    for steps in (25, 50, 100, 200, 400):
        end = geodesic_ivp(structure, GeodesicIvp(x0, y0, steps=steps)).points[-1]
        err = float(np.linalg.norm(end - ref))
        order = "" if prev is None else f"{np.log2(prev / err):15.3f}"
        print(f"{steps:6d} {err:15.3e} {order:>15}")
        prev = err


if __name__ == "__main__":
    main()
