"""Self-testing: the maximal score forces a state that is far from every real one.

The swap isometry applied to the ideal strategy extracts two maximally entangled
pairs whose outcome-averaged state sits at trace distance one from the PPT set.
Real strategies give a state inside that set. The robustness constant bounds the
score deficit below which the distance stays positive.
Run: python3 demos/03_self_testing.py
"""

from __future__ import annotations

import numpy as np

from realnet import qcore, selftest
from realnet.netsim import Strategy, bell_projectors

out = selftest.extraction(route="embedded")
for b in range(4):
    d = qcore.trace_distance(out.per_b_state[b], selftest.perfect_state(b))
    print(f"b={b:02b}: distance of extracted state from the target {d:.1e}")
print(f"PPT-set distance of the summed state: {selftest.ppt_set_distance(out.summed_state):.9f}")

rng = np.random.default_rng(0)
s = Strategy(qcore.random_density(4, rng, real=True), qcore.random_density(4, rng, real=True),
             [qcore.random_involution(2, rng, real=True) for _ in range(3)], bell_projectors(),
             [qcore.random_involution(2, rng, real=True) for _ in range(6)])
print(f"random real strategy: PPT-set distance {selftest.ppt_set_distance(selftest.extraction(s).summed_state):.1e}")

eps = selftest.critical_epsilon()
print(f"critical score deficit: {eps:.4e}")
for c in selftest.approximate_extraction_check(selftest.perturbed_strategy(1e-3)):
    print(f"  perturbed b={c.b:02b}: deficit {c.epsilon:.2e}, distance {c.distance:.2e} "
          f"<= {c.distance_bound:.2e}: {c.passed}")
