"""Dense tensor helpers: validation, Kronecker products, patch extraction.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 in C (row-major)
order.  Every function here is pure and returns fresh arrays.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import NumericError, ShapeError

Shape = tuple[int, ...]


def as_tensor(x, *, copy: bool = False) -> np.ndarray:
    """Return ``x`` as a C-contiguous float64 array with at least one dimension."""
    if copy:
        arr = np.array(x, dtype=np.float64, order="C", ndmin=1)
    else:
        arr = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    if arr.size == 0:
        raise ShapeError(f"tensor shape {arr.shape} has a zero-length dimension")
    return arr


def as_shape(shape: Sequence[int] | int, ndim: int | None = None) -> Shape:
    """Validate a shape vector: positive integers, optionally of a fixed length."""
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    out = tuple(int(s) for s in shape)
    if any(s < 1 for s in out):
        raise ShapeError(f"shape entries must be >= 1, got {out}")
    if ndim is not None and len(out) != ndim:
        raise ShapeError(f"expected a shape with {ndim} entries, got {out}")
    return out


def check_finite(x: np.ndarray, what: str = "input") -> None:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{what} contains non-finite values")


def split_index(i: int, b_n: int) -> tuple[int, int]:
    """Split a Kronecker-product index into (factor-A index, factor-B index).

    ``i = j * b_n + k`` with ``0 <= k < b_n``.
    """
    if i < 0 or b_n < 1:
        raise ValueError(f"need i >= 0 and b_n >= 1, got i={i}, b_n={b_n}")
    return divmod(i, b_n)


def merge_index(j: int, k: int, b_n: int) -> int:
    """Inverse of :func:`split_index`."""
    return j * b_n + k


def _interleave(na: int) -> list[int]:
    # axes (a0, a1, ..., b0, b1, ...) -> (a0, b0, a1, b1, ...)
    order = []
    for n in range(na):
        order += [n, na + n]
    return order


def kron(a, b) -> np.ndarray:
    """Multidimensional Kronecker product of two tensors with equal ``ndim``.

    Element ``i`` of the result equals ``a[i // b.shape] * b[i % b.shape]``
    taken per dimension, so ``b`` is tiled over ``a`` in non-overlapping blocks.
    For matrices this is the ordinary Kronecker product.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != b.ndim:
        raise ShapeError(f"kron needs equal ndim, got {a.shape} and {b.shape}")
    n = a.ndim
    outer = np.multiply.outer(a, b)
    out_shape = tuple(p * q for p, q in zip(a.shape, b.shape))
    return np.ascontiguousarray(outer.transpose(_interleave(n))).reshape(out_shape)


def _patch_grid(shape: Shape, d: Shape) -> Shape:
    if len(d) != len(shape):
        raise ShapeError(f"patch shape {d} does not match tensor rank {len(shape)}")
    for n, (s, p) in enumerate(zip(shape, d)):
        if s % p:
            raise ShapeError(
                f"dimension {n}: patch size {p} does not divide tensor size {s}"
            )
    return tuple(s // p for s, p in zip(shape, d))


def unfold(w, d: Sequence[int]) -> np.ndarray:
    """Extract the non-overlapping patches of shape ``d`` from ``w``.

    Returns an array of shape ``(num_patches, *d)``.  Patches are enumerated in
    row-major order over the patch grid.
    """
    w = as_tensor(w)
    d = as_shape(d, w.ndim)
    grid = _patch_grid(w.shape, d)
    n = w.ndim
    split = w.reshape(tuple(x for pair in zip(grid, d) for x in pair))
    perm = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    return np.ascontiguousarray(split.transpose(perm)).reshape((-1,) + d)


def fold(patches, shape: Sequence[int]) -> np.ndarray:
    """Reassemble the output of :func:`unfold` into a tensor of ``shape``."""
    patches = as_tensor(patches)
    d = patches.shape[1:]
    shape = as_shape(shape, len(d))
    grid = _patch_grid(shape, d)
    if patches.shape[0] != int(np.prod(grid)):
        raise ShapeError(
            f"{patches.shape[0]} patches cannot tile {shape} with patches of {d}"
        )
    n = len(d)
    blocks = patches.reshape(grid + d)
    return np.ascontiguousarray(blocks.transpose(_interleave(n))).reshape(shape)


def frobenius_norm(w) -> float:
    """Square root of the sum of squared entries."""
    w = as_tensor(w)
    # scale first so huge or tiny entries neither overflow nor underflow
    scale = np.max(np.abs(w))
    if scale == 0.0:
        return 0.0
    return float(scale * np.sqrt(np.sum((w / scale) ** 2)))
