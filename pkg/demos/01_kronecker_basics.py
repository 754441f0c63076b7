# Kronecker products of tensors, and how to undo them
#
# A Kronecker product of two tensors with the same number of dimensions
# tiles copies of the second tensor, each scaled by one entry of the first.

import numpy as np

from gkpd import fold, kron, split_index, unfold

rng = np.random.default_rng(0)

# Two small 2-D factors give a 6x6 matrix, same as np.kron
a = rng.standard_normal((2, 3))
b = rng.standard_normal((3, 2))
w = kron(a, b)
print("kron shape:", w.shape)
print("matches np.kron:", np.allclose(w, np.kron(a, b)))

# Works in any number of dimensions, e.g. a 4-D conv weight
a4 = rng.standard_normal((4, 2, 3, 1))
b4 = rng.standard_normal((2, 3, 1, 3))
w4 = kron(a4, b4)
print("4-D kron shape:", w4.shape)

# Each output index i splits as i = j * b_n + k
j, k = split_index(7, 3)
print("index 7 with b_n = 3 ->", (j, k))

# unfold cuts w into a grid of b-shaped patches; patch number r is a[r] * b
patches = unfold(w4, b4.shape)
print("patches:", patches.shape)
print("patch 5 == a.flat[5] * b:", np.allclose(patches[5], a4.flat[5] * b4))

# fold puts the patches back
print("fold(unfold(w)) == w:", np.array_equal(fold(patches, w4.shape), w4))
