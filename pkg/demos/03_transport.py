"""Geodesics and parallel frames in any signature.

In the (--++) pp-wave of the ``pp-example-ssmm`` scenario the geodesic
``(0, s, 0, 0)`` is null; its normal frame is ``(d_x, d_y)`` with one
timelike member, listed first.  Drift of the frame Gram matrix is
measured, never corrected.
"""

import numpy as np

from pwlab.scenarios import scenario
from pwlab.transport import geodesic_with_frame

sc = scenario("pp-example-ssmm")
rec, fr = geodesic_with_frame(sc.metric, sc.x0, sc.v0, sc.span)
print("causal character:", rec.causal)
print("frame signs:     ", fr.eps)
print("frame at s = 5:  ", np.round(fr.at(5.0)[2], 12).tolist())
print("energy drift {:.1e}, Gram drift {:.1e}".format(rec.energy_drift, fr.gram_drift))

sph = scenario("sphere-3")
rec, fr = geodesic_with_frame(sph.metric, sph.x0, sph.v0, (0.0, 10.0))
print("sphere: energy drift {:.1e}, Gram drift {:.1e}, orthogonality drift {:.1e}".format(
    rec.energy_drift, fr.gram_drift, fr.orth_drift))
