# Approximating a conv weight with a sum of Kronecker products
#
# Rearranging W so each patch becomes a row turns the problem into a
# low-rank matrix approximation, which a truncated SVD solves exactly.

import numpy as np

from gkpd import FactorShapePair, gkpd_solve, kron, memory_reduction, reconstruct, rearrange_w

rng = np.random.default_rng(1)
w = rng.standard_normal((16, 8, 3, 3))
pair = FactorShapePair.from_shape_b(w.shape, (4, 4, 1, 3))
print("A shape:", pair.shape_a, " B shape:", pair.shape_b, " max rank:", pair.full_rank)

# The rearranged matrix: one row per patch
m = rearrange_w(w, pair.shape_b)
s = np.linalg.svd(m, compute_uv=False)

print("\n r_hat  rel.error  tail bound  compression")
for r in (1, 2, 4, 8, pair.full_rank):
    d = gkpd_solve(w, pair, r)
    rel = d.achieved_error / np.linalg.norm(w)
    bound = np.sqrt(np.sum(s[r:] ** 2)) / np.linalg.norm(w)
    print(f"{r:6d}  {rel:9.4f}  {bound:10.4f}  {float(memory_reduction(pair, r)):11.2f}")

# At full rank the sum reproduces W to rounding error
d = gkpd_solve(w, pair, pair.full_rank)
print("\nfull-rank max |W - sum a_r (x) b_r|:", np.max(np.abs(w - reconstruct(d))))

# A weight that really is one Kronecker product is recovered at rank 1
a, b = rng.standard_normal(pair.shape_a), rng.standard_normal(pair.shape_b)
d1 = gkpd_solve(kron(a, b), pair, 1)
print("planted rank-1 error:", d1.achieved_error)
