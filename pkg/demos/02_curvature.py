"""Curvature of a metric at a point.

The round sphere in polar coordinates has ``Rm(d_th, d_ph, d_ph, d_th) =
sin^2 th`` with the convention that spheres have positive sectional
curvature, scalar curvature 2 and Ricci equal to the metric.
"""

import numpy as np

from pwlab.geometry import MetricSpec, curvature_at

m = MetricSpec([[1, 0], [0, "sin(th)^2"]], names=["th", "ph"], base_point=[1.0, 0.0])
cp = curvature_at(m, [0.7, 0.0])
print("Rm(th, ph, ph, th) =", cp.rm[0, 1, 1, 0], " sin^2(0.7) =", np.sin(0.7) ** 2)
print("sectional curvature:", cp.sectional([1, 0], [0, 1]))
print("scalar curvature:   ", cp.scal)
print("Ricci - g:          ", np.max(np.abs(cp.ric - cp.g)))

# the upper half plane has curvature -1
hp = MetricSpec([["1/y^2", 0], [0, "1/y^2"]], names=["x", "y"], base_point=[0, 1])
print("half plane scalar curvature:", curvature_at(hp, [0.2, 0.5]).scal)
