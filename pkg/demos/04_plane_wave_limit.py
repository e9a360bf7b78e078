"""Wave profiles and their plane wave limits.

Along a unit-speed geodesic of the unit sphere every profile is
``A = -I``.  On a torus of revolution it is minus the Gauss curvature,
``-cos u / (2 + cos u)``.  The same profile comes out of the lightlike
lift into ``-d tau^2 + g`` and out of Rosen data built from it.
"""

import numpy as np

from pwlab.limit import (assemble_plane_wave, lift_and_limit, profile_deviation,
                         rosen_to_brinkmann, wave_profile)
from pwlab.scenarios import scenario
from pwlab.transport import geodesic_with_frame, integrate_geodesic

sc = scenario("sphere-3")
rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, (0.0, 10.0))
p = wave_profile(rec, fr)
print("sphere: max |A + I| =", np.max(np.abs(p.A + np.eye(2))))
pw = assemble_plane_wave(p)
print("limit metric coordinates:", pw.metric.names, "index", pw.metric.index)

tor = scenario("torus")
rec = integrate_geodesic(tor.metric, tor.x0, tor.v0, tor.span)
p = wave_profile(rec)
u = p.frame.x[:, 0]
print("torus: max |A + K| =", np.max(np.abs(p.A[:, 0, 0] + np.cos(u) / (2 + np.cos(u)))))
print("torus: lift vs direct =", profile_deviation(lift_and_limit(tor.metric, rec), p))

q = rosen_to_brinkmann([["cos(t)^2"]], (0.0, 1.4))
print("Rosen cos^2 t: max |A + 1| =", np.max(np.abs(q.A + 1)))
print(p.to_csv().splitlines()[:3])
