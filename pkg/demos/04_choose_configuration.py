# Picking factor shapes and a rank under a compression budget
#
# Every way of splitting each dimension into a product gives a candidate.
# The search keeps candidates meeting the budget and ranks them by error.

import numpy as np

from gkpd import enumerate_candidates, select_configuration

rng = np.random.default_rng(3)
w = rng.standard_normal((32, 16, 3, 3))

cands = enumerate_candidates(w.shape, r_hat_range=(1, 8), min_memory_reduction=4)
print(len(cands), "candidates with at least 4x fewer parameters")

sel = select_configuration(w, cands)
print("\n shape_a         shape_b        r_hat  params  rel.error")
for c in sel.candidates[:8]:
    print(f" {str(c.pair.shape_a):15s} {str(c.pair.shape_b):14s} {c.r_hat:5d} {c.params:7d}  {c.relative_error:.4f}")

best = sel.best
print("\nchosen:", best.pair.shape_a, best.pair.shape_b, "r_hat =", best.r_hat)
print("compression %.2fx, MAC reduction %.2fx" % (best.memory_reduction, best.flops_reduction))

# Using several terms usually beats a single term at the same budget
one = min(c.relative_error for c in sel.candidates if c.r_hat == 1)
many = min(c.relative_error for c in sel.candidates if c.r_hat > 1)
print("best single term: %.4f   best multi-term: %.4f" % (one, many))
