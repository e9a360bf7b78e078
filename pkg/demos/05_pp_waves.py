"""Classification and geodesics of pp-waves.

Flags come with the residual that decided them.  Geodesics use the
reduced system, in which ``t`` is affine and the transverse equations
decouple from ``v``.
"""

import numpy as np

from pwlab.geometry import MetricSpec
from pwlab.ppwave import classify, integrate_pp_geodesic
from pwlab.scenarios import scenario

for name in ("pp-example-ssmm", "pp-ricci-flat"):
    c = classify(scenario(name).metric, t_range=(0.0, 6.0))
    print(name)
    for flag, res in c.to_dict().items():
        print(f"  {flag:20s} {str(res['value']):5s} residual {res['residual']:.2e}")

m = MetricSpec([[0, 1, 0], [1, "-x^2", 0], [0, 0, 1]], names=["v", "t", "x"])
rec = integrate_pp_geodesic(m, [0, 0, 0], [0, 1, 1], (0.0, 6.0))
print("H = -x^2: max |x - sin t| =", np.max(np.abs(rec.x[:, 2] - np.sin(rec.t))))
