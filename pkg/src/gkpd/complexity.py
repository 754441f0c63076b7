"""Parameter and multiply-accumulate accounting, and configuration search.

One FLOP is counted as one multiply-accumulate (MAC).  Ratios are returned as
exact :class:`fractions.Fraction` values where the inputs are integers; use
``float()`` for display.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .decomposition import FactorShapePair, GkpdDecomposition, _from_svd, rearranged_svd
from .errors import ParameterError, ShapeError
from .kronconv import ConvGeometry
from .tensor import as_shape, as_tensor, frobenius_norm


def _conv_pair(pair: FactorShapePair) -> FactorShapePair:
    if pair.ndim != 4:
        raise ShapeError(f"conv accounting needs 4-D factors, got {pair.ndim}-D")
    return pair


def num_params(pair: FactorShapePair, r_hat: int) -> int:
    return int(r_hat) * (pair.size_a + pair.size_b)


def memory_reduction(pair: FactorShapePair, r_hat: int) -> Fraction:
    """Uncompressed element count over stored factor parameters."""
    return Fraction(pair.size_a * pair.size_b, num_params(pair, r_hat))


def flops_reduction(pair: FactorShapePair, r_hat: int) -> Fraction:
    """MACs of the dense convolution over MACs of the two-stage path.

    Per output position: ``|A| |B| / (r_hat (F2 |A| + C1 |B|))``.
    """
    pair = _conv_pair(pair)
    f2 = pair.shape_b[0]
    c1 = pair.shape_a[1]
    na, nb = pair.size_a, pair.size_b
    return Fraction(na * nb, int(r_hat) * (f2 * na + c1 * nb))


def separable_flops_reduction(f1: int, c2: int) -> Fraction:
    """FLOPs reduction for a 3x3 kernel split as 3x1 in A and 1x3 in B, ``r_hat = 1``.

    The factor channel counts ``C1`` and ``F2`` cancel, leaving
    ``3 F1 C2 / (F1 + C2)``.
    """
    return Fraction(3 * f1 * c2, f1 + c2)


def separable_pair(f1: int, c1: int, f2: int, c2: int) -> FactorShapePair:
    """The pair used by :func:`separable_flops_reduction`: A carries 3x1, B carries 1x3."""
    return FactorShapePair((f1, c1, 3, 1), (f2, c2, 1, 3))


def count_macs_direct(w_shape: Sequence[int], in_shape: Sequence[int], g: ConvGeometry = ConvGeometry()) -> int:
    """MACs of a dense convolution of a ``C x H x W`` input."""
    f, c, kh, kw = as_shape(w_shape, 4)
    _, h, w = as_shape(in_shape, 3)
    ho, wo = g.output_size((h, w), (kh, kw))
    return f * ho * wo * c * kh * kw


def count_macs_kron(
    pair: FactorShapePair, r_hat: int, in_shape: Sequence[int], g: ConvGeometry = ConvGeometry()
) -> int:
    """MACs of ``r_hat`` two-stage Kronecker convolutions.

    Stage one runs at spatial stride 1 over the whole padded input; stage two
    produces only the final output positions.
    """
    f1, c1, kh1, kw1 = _conv_pair(pair).shape_a
    f2, c2, kh2, kw2 = pair.shape_b
    _, h, w = as_shape(in_shape, 3)
    ph, pw = g.padding
    ho, wo = g.output_size((h, w), (kh1 * kh2, kw1 * kw2))
    h1 = h + 2 * ph - kh2 + 1
    w1 = w + 2 * pw - kw2 + 1
    stage1 = f2 * c1 * h1 * w1 * c2 * kh2 * kw2
    stage2 = f1 * f2 * ho * wo * c1 * kh1 * kw1
    return int(r_hat) * (stage1 + stage2)


@dataclass(frozen=True)
class ConfigCandidate:
    """One factor-shape choice with its cost figures and (optionally) its error."""

    pair: FactorShapePair
    r_hat: int
    params: int
    memory_reduction: Fraction
    flops_reduction: Fraction
    error: float | None = None
    relative_error: float | None = None

    @classmethod
    def build(cls, pair: FactorShapePair, r_hat: int) -> "ConfigCandidate":
        return cls(
            pair=pair,
            r_hat=int(r_hat),
            params=num_params(pair, r_hat),
            memory_reduction=memory_reduction(pair, r_hat),
            flops_reduction=flops_reduction(pair, r_hat),
        )

    def sort_key(self) -> tuple:
        # errors equal to 10 significant digits count as ties, so last-bit
        # rounding noise cannot reorder otherwise-equivalent candidates
        err = float("inf") if self.error is None else float(f"{self.error:.9e}")
        return (err, self.params, self.pair.shape_a, self.pair.shape_b, self.r_hat)


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def enumerate_candidates(
    w_shape: Sequence[int],
    min_flops_reduction: float | None = None,
    r_hat_range: tuple[int, int] = (1, 1),
    min_memory_reduction: float | None = None,
) -> list[ConfigCandidate]:
    """All divisor-pair factor shapes crossed with ``r_hat`` values.

    Candidates with ``r_hat`` above the pair's full Kronecker rank or below the
    requested reductions are dropped.  Ordered by ``(params, shape_a, shape_b,
    r_hat)``.
    """
    shape = as_shape(w_shape, 4)
    lo, hi = (int(r) for r in r_hat_range)
    if lo < 1 or hi < lo:
        raise ParameterError(f"invalid r_hat range {r_hat_range}")
    out = []
    for shape_a in itertools.product(*(_divisors(n) for n in shape)):
        pair = FactorShapePair.from_shape_b(shape, tuple(n // a for n, a in zip(shape, shape_a)))
        for r in range(lo, min(hi, pair.full_rank) + 1):
            cand = ConfigCandidate.build(pair, r)
            if min_flops_reduction is not None and cand.flops_reduction < min_flops_reduction:
                continue
            if min_memory_reduction is not None and cand.memory_reduction < min_memory_reduction:
                continue
            out.append(cand)
    out.sort(key=lambda c: (c.params, c.pair.shape_a, c.pair.shape_b, c.r_hat))
    return out


class Selection(NamedTuple):
    best: ConfigCandidate
    decomposition: GkpdDecomposition
    candidates: list[ConfigCandidate]


def select_configuration(w, candidates: Sequence[ConfigCandidate]) -> Selection:
    """Solve every candidate and pick the one with the smallest error.

    ``candidates`` in the result carry their errors and are sorted by
    ``(error, params, shape_a, shape_b, r_hat)``; the first one is the winner.
    One SVD is computed per distinct factor-shape pair.
    """
    w = as_tensor(w)
    if not candidates:
        raise ParameterError("no candidates to select from")
    norm = frobenius_norm(w)
    by_pair: dict[FactorShapePair, list[ConfigCandidate]] = {}
    for c in candidates:
        c.pair.check(w.shape)
        by_pair.setdefault(c.pair, []).append(c)
    solved = []
    for pair in sorted(by_pair, key=lambda p: (p.shape_a, p.shape_b)):
        svd = rearranged_svd(w, pair)
        for c in by_pair[pair]:
            d = _from_svd(w, pair, c.r_hat, svd)
            rel = d.achieved_error / norm if norm > 0 else 0.0
            solved.append((replace(c, error=d.achieved_error, relative_error=rel), d))
    solved.sort(key=lambda cd: cd[0].sort_key())
    best, decomp = solved[0]
    return Selection(best, decomp, [c for c, _ in solved])


def solve_candidate(w, c: ConfigCandidate) -> GkpdDecomposition:
    w = as_tensor(w)
    return _from_svd(w, c.pair, c.r_hat, rearranged_svd(w, c.pair))

