"""Conjugate points, the limit-side count and the Morse bound.

For the (--++) example both causal blocks give ``sin s``, so conjugate
points sit at pi and 2 pi with multiplicity 2.  The limit geodesic
``t = s`` sees them at the same parameters.
"""

import math

from pwlab.deviation import (conjugate_points, correspondence_check, focusing_check,
                             limit_conjugate_points, morse_bound)
from pwlab.limit import wave_profile
from pwlab.scenarios import scenario
from pwlab.transport import geodesic_with_frame

sc = scenario("pp-example-ssmm")
interval = (0.0, 2.5 * math.pi)
rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, interval)
p = wave_profile(rec, fr)

base = conjugate_points(p, interval)
lim = limit_conjugate_points(p, interval)
print("base :", [(round(t / math.pi, 8), m) for t, m in base.points], "(units of pi)")
print("limit:", [(round(t / math.pi, 8), m) for t, m in lim.points])
print("Morse bound holds:", morse_bound(base, lim), f"({base.total} <= {base.index_bound})")

res = correspondence_check(p, lambda s: [math.sin(s), 0.0], (0.0, 2 * math.pi))
print("correspondence residuals:", {k: f"{v:.1e}" for k, v in res.items()})

rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, (-4.0, 4.0), t0=0.0)
print("focusing:", focusing_check(wave_profile(rec, fr), 4.0))
