"""How much white noise an experiment can tolerate.

With per-link visibility v the ideal score becomes 6*sqrt(2)*v^2; it must stay
above the real bound 7.6605 to rule out real quantum theory.
Run: python3 demos/05_noise_threshold.py
"""

from __future__ import annotations

from realnet.bellfunc import QUANTUM_MAX, REAL_BOUND, grid_threshold, visibility_threshold

print(f"exact threshold: v = {visibility_threshold(REAL_BOUND):.6f}")
print(f"grid threshold (step 1e-4): v = {grid_threshold(REAL_BOUND):.4f}")
for v in (0.94, 0.95, 0.96):
    score = QUANTUM_MAX * v ** 2
    print(f"v = {v:.2f}: score {score:.4f} {'>' if score > REAL_BOUND else '<='} {REAL_BOUND}")
