"""The ideal swap strategy and its score.

Two maximally entangled pairs, a Bell-state measurement at Bob and the CHSH3
settings for Alice and Charlie give the value 6*sqrt(2) on every Bob outcome.
Run: python3 demos/01_ideal_strategy.py
"""

from __future__ import annotations

import numpy as np

from realnet.bellfunc import QUANTUM_MAX, t_total
from realnet.netsim import apply_white_noise, correlations, ideal_strategy, sample

s = ideal_strategy()
t = correlations(s)
score = t_total(t)
print(f"T(ideal)        = {score.total:.12f}  (6 sqrt 2 = {QUANTUM_MAX:.12f})")
print(f"P(b)            = {np.round(score.p_b, 12)}")
print(f"T_b             = {np.round(score.per_b, 12)}")

for v in (1.0, 0.97, 0.95, 0.9):
    print(f"visibility {v:.2f}: T = {t_total(correlations(apply_white_noise(s, v))).total:.6f}")

rec = sample(t, 200_000, seed=7)
print(f"sampled (200k rounds): T = {t_total(rec.empirical).total:.4f}")
