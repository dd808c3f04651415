"""What erasure feedback is worth, in age units and in percent.

The gain is the difference between the optimal average age without and
with feedback. It vanishes at q = 0 (nothing to react to) and must fade
as q -> 1 (both settings collapse), so it peaks at moderate erasure
rates. With many sources the relative saving approaches q/(1+q).
"""

import numpy as np

from aoi_erasure import feedback_gain, percentage_gain

qs = np.round(np.arange(0.0, 0.91, 0.05), 2)

print("single source: absolute gain of feedback vs erasure probability")
print(f"{'q':>5} {'gain':>9}")
for q in qs:
    print(f"{q:>5.2f} {feedback_gain(q):>9.5f}")
gains = [feedback_gain(q) for q in qs]
print(f"peak at q = {qs[int(np.argmax(gains))]:.2f}\n")

# percentage gain across source counts at a fixed q; the thresholds are
# optimized per cell, so small M mixes threshold and greedy regimes
q = 0.3
limit = 100.0 * q / (1.0 + q)
print(f"percentage gain at q = {q} vs number of sources")
print(f"{'M':>5} {'gain %':>8}")
for M in (1, 2, 3, 4, 8, 16, 50, 200):
    print(f"{M:>5d} {percentage_gain(q, M):>8.4f}")
print(f"large-M limit 100*q/(1+q) = {limit:.4f}")
