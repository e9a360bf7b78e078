"""Sampled evidence that limits inherit curvature properties.

Each item measures a property on the base metric along seeded random
geodesics and the matching flag on each limit.  Reports are labelled
evidence: finitely many geodesics prove nothing.
"""

from pwlab.evidence import verify_item
from pwlab.scenarios import scenario

for item, name in [("i", "flat-3"), ("ii", "sphere-3"), ("iii", "pp-ricci-flat"),
                   ("v", "hyperbolic-3"), ("vi", "hyperbolic-3"), ("vii", "sphere-2")]:
    rep = verify_item(scenario(name), item, count=8)
    worst = max((g.get("base_residual", 0.0) for g in rep["geodesics"]), default=0.0)
    print(f"{item:4s} {name:14s} {rep['base_property']:45s} pass={rep['pass']} "
          f"worst base residual {worst:.1e}")

# a negative control: the torus has Ricci curvature of both signs
print("torus item vi:", verify_item(scenario("torus"), "vi", count=4)["pass"])
