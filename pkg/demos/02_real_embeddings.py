"""Real simulations that do work: single sources and independent classical preparations.

A single complex source is reproduced by a real one of twice the dimension, so a
standard Bell test cannot tell the two theories apart. Independent preparations
measured jointly are also reproduced. The same trick fails in the swap network,
because the doubled spaces of the two sources cannot be merged consistently.
Run: python3 demos/02_real_embeddings.py
"""

from __future__ import annotations

from realnet import realsim

trials = realsim.random_trials(100, seed=1)
print(f"100 random instances: single-site deviation {trials['single_max_deviation']:.1e}, "
      f"bipartite deviation {trials['bipartite_max_deviation']:.1e}")

ch = realsim.chsh3_embedding_report()
print(f"CHSH3: complex {ch['complex_value']:.9f}, embedded real {ch['real_value']:.9f} "
      f"on dimensions {ch['real_dims']}")

sim = realsim.simulate_independent_preparations(*realsim.pbr_scenario())
print(f"independent preparations (PBR measurement): deviation {sim.max_deviation:.1e}")

for n in realsim.swap_negative_control():
    print(f"swap transplant {n.mapping}: Bob real {n.bob_real}, complete {n.bob_complete}, "
          f"statistics deviation {n.max_stat_deviation:.3f}, valid {n.valid_simulation}")
