"""Sum-of-Kronecker-products approximation of N-dimensional tensors.

A tensor ``w`` with ``w.shape[n] == a[n] * b[n]`` is approximated by
``sum_r kron(A_r, B_r)``.  Rearranging ``w`` so that row ``i`` holds the
``i``-th non-overlapping ``b``-shaped patch turns every Kronecker term into a
rank-one matrix, so the best approximation with ``r_hat`` terms is read off a
truncated SVD of the rearranged matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, ShapeError
from .linalg import SvdResult, svd_full, tail_energy
from .tensor import Shape, as_shape, as_tensor, check_finite, frobenius_norm, kron, unfold


@dataclass(frozen=True)
class FactorShapePair:
    """Shapes of the two Kronecker factors of a target tensor."""

    shape_a: Shape
    shape_b: Shape

    def __post_init__(self):
        a = as_shape(self.shape_a)
        b = as_shape(self.shape_b, len(a))
        object.__setattr__(self, "shape_a", a)
        object.__setattr__(self, "shape_b", b)

    @classmethod
    def from_shape_b(cls, target: Sequence[int], shape_b: Sequence[int]) -> "FactorShapePair":
        target = as_shape(target)
        shape_b = as_shape(shape_b, len(target))
        for n, (t, b) in enumerate(zip(target, shape_b)):
            if t % b:
                raise ShapeError(f"dimension {n}: {b} does not divide {t}")
        return cls(tuple(t // b for t, b in zip(target, shape_b)), shape_b)

    @property
    def ndim(self) -> int:
        return len(self.shape_a)

    @property
    def target_shape(self) -> Shape:
        return tuple(p * q for p, q in zip(self.shape_a, self.shape_b))

    @property
    def size_a(self) -> int:
        return int(np.prod(self.shape_a))

    @property
    def size_b(self) -> int:
        return int(np.prod(self.shape_b))

    @property
    def full_rank(self) -> int:
        """Number of terms needed to represent any tensor exactly."""
        return min(self.size_a, self.size_b)

    def check(self, shape: Sequence[int]) -> None:
        shape = tuple(shape)
        if len(shape) != self.ndim:
            raise ShapeError(f"pair has {self.ndim} dimensions, tensor has {len(shape)}")
        for n, (s, p, q) in enumerate(zip(shape, self.shape_a, self.shape_b)):
            if p * q != s:
                raise ShapeError(
                    f"dimension {n}: factor sizes {p} x {q} do not give tensor size {s}"
                )


@dataclass(frozen=True)
class GkpdDecomposition:
    """``r_hat`` Kronecker factor pairs approximating one tensor.

    ``factors_a`` and ``factors_b`` are stacked along a leading axis of length
    ``r_hat``.
    """

    target_shape: Shape
    pair: FactorShapePair
    r_hat: int
    factors_a: np.ndarray
    factors_b: np.ndarray
    singular_tail_sq: float = 0.0
    achieved_error: float = 0.0
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def __post_init__(self):
        if self.factors_a.shape != (self.r_hat,) + self.pair.shape_a:
            raise ShapeError(f"factors_a has shape {self.factors_a.shape}")
        if self.factors_b.shape != (self.r_hat,) + self.pair.shape_b:
            raise ShapeError(f"factors_b has shape {self.factors_b.shape}")

    @classmethod
    def from_factors(cls, factors_a, factors_b) -> "GkpdDecomposition":
        """Wrap explicit factor stacks (no error metadata)."""
        fa = np.stack([as_tensor(a) for a in factors_a])
        fb = np.stack([as_tensor(b) for b in factors_b])
        if len(fa) != len(fb):
            raise ShapeError(f"{len(fa)} A factors but {len(fb)} B factors")
        pair = FactorShapePair(fa.shape[1:], fb.shape[1:])
        return cls(pair.target_shape, pair, len(fa), fa, fb)

    @property
    def num_params(self) -> int:
        """Number of stored scalars across all factors."""
        return int(self.factors_a.size + self.factors_b.size)

    def __iter__(self):
        return iter(zip(self.factors_a, self.factors_b))


def rearrange_w(w, shape_b: Sequence[int]) -> np.ndarray:
    """Matrix whose row ``i`` is the flattened ``i``-th ``shape_b`` patch of ``w``."""
    patches = unfold(w, shape_b)
    return patches.reshape(patches.shape[0], -1)


def rearrange_a(a) -> np.ndarray:
    """Flatten ``a`` in the patch order used by :func:`rearrange_w`."""
    a = as_tensor(a)
    return unfold(a, (1,) * a.ndim).reshape(-1)


def rearrange_b(b) -> np.ndarray:
    """Flatten ``b`` in the within-patch order used by :func:`rearrange_w`."""
    return as_tensor(b).reshape(-1)


def _from_svd(
    w: np.ndarray, pair: FactorShapePair, r_hat: int, svd: SvdResult
) -> GkpdDecomposition:
    s = svd.s[:r_hat]
    # numerically absent terms come back as exact zeros
    alive = s > svd.s[0] * 1e-14 if svd.s[0] > 0 else np.zeros(r_hat, bool)
    root = np.where(alive, np.sqrt(s), 0.0)
    fa = (svd.u[:, :r_hat] * root).T.reshape((r_hat,) + pair.shape_a)
    fb = (svd.v[:, :r_hat] * root).T.reshape((r_hat,) + pair.shape_b)
    fa = np.ascontiguousarray(fa)
    fb = np.ascontiguousarray(fb)
    d = GkpdDecomposition(
        target_shape=w.shape,
        pair=pair,
        r_hat=r_hat,
        factors_a=fa,
        factors_b=fb,
        singular_tail_sq=tail_energy(svd.s, r_hat),
        singular_values=svd.s.copy(),
    )
    object.__setattr__(d, "achieved_error", frobenius_norm(w - reconstruct(d)))
    return d


def rearranged_svd(w, pair: FactorShapePair) -> SvdResult:
    """Full SVD of the rearranged matrix of ``w`` for a given factor-shape pair."""
    w = as_tensor(w)
    pair.check(w.shape)
    check_finite(w, "tensor")
    return svd_full(rearrange_w(w, pair.shape_b))


def gkpd_solve(w, pair: FactorShapePair, r_hat: int) -> GkpdDecomposition:
    """Best Frobenius-norm approximation of ``w`` by ``r_hat`` Kronecker terms.

    Each singular value is split evenly between the two factors of its term.
    """
    w = as_tensor(w)
    pair.check(w.shape)
    r_hat = int(r_hat)
    if not 1 <= r_hat <= pair.full_rank:
        raise ParameterError(f"r_hat must lie in [1, {pair.full_rank}], got {r_hat}")
    return _from_svd(w, pair, r_hat, rearranged_svd(w, pair))


def solve_ranks(w, pair: FactorShapePair, r_hats: Sequence[int]) -> dict[int, GkpdDecomposition]:
    """:func:`gkpd_solve` for several ``r_hat`` values sharing one SVD."""
    w = as_tensor(w)
    svd = rearranged_svd(w, pair)
    out = {}
    for r in r_hats:
        if not 1 <= r <= pair.full_rank:
            raise ParameterError(f"r_hat must lie in [1, {pair.full_rank}], got {r}")
        out[int(r)] = _from_svd(w, pair, int(r), svd)
    return out


def reconstruct(d: GkpdDecomposition) -> np.ndarray:
    """Sum of ``kron(A_r, B_r)`` over all terms."""
    # stacked form of the Kronecker sum: contract the term axis of an outer product
    n = d.pair.ndim
    summed = np.tensordot(d.factors_a, d.factors_b, axes=(0, 0))
    order = []
    for k in range(n):
        order += [k, n + k]
    return np.ascontiguousarray(summed.transpose(order)).reshape(d.target_shape)


def reconstruction_error(w, d: GkpdDecomposition) -> float:
    """Frobenius distance between ``w`` and the reconstruction of ``d``."""
    w = as_tensor(w)
    if tuple(w.shape) != tuple(d.target_shape):
        raise ShapeError(f"tensor shape {w.shape} != decomposition shape {d.target_shape}")
    return frobenius_norm(w - reconstruct(d))


def relative_error(w, d: GkpdDecomposition) -> float:
    norm = frobenius_norm(w)
    return reconstruction_error(w, d) / norm if norm > 0 else 0.0


def kron_sum(factors_a, factors_b) -> np.ndarray:
    """Reference Kronecker sum built term by term with :func:`kron`."""
    terms = [kron(a, b) for a, b in zip(factors_a, factors_b)]
    return np.sum(terms, axis=0)
