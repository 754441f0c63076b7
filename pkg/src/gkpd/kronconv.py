"""Convolution with Kronecker-factored weights, without forming the weight.

A weight ``W = kron(A, B)`` of shape ``F x C x Kh x Kw`` with
``A: F1 x C1 x Kh1 x Kw1`` and ``B: F2 x C2 x Kh2 x Kw2`` is applied in two
stages:

1. every group of ``C2`` consecutive input channels is collapsed with ``B``
   (a 3-D convolution with channel stride ``C2`` and spatial stride 1), giving
   an ``F2 x C1 x H1 x W1`` intermediate;
2. each of the ``F2`` intermediate maps is convolved with ``A`` using spatial
   dilation ``(Kh2, Kw2)`` and the original stride.

Output channel ``f`` corresponds to ``(f1, f2)`` with ``f = f1 * F2 + f2``,
matching the channel ordering of :func:`gkpd.tensor.kron`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .decomposition import GkpdDecomposition
from .errors import ShapeError
from .tensor import as_tensor, kron


@dataclass(frozen=True)
class ConvGeometry:
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        stride = _pair(self.stride)
        padding = _pair(self.padding)
        if min(stride) < 1:
            raise ShapeError(f"stride must be positive, got {stride}")
        if min(padding) < 0:
            raise ShapeError(f"padding must be non-negative, got {padding}")
        object.__setattr__(self, "stride", stride)
        object.__setattr__(self, "padding", padding)

    def output_size(self, in_hw: tuple[int, int], kernel_hw: tuple[int, int]) -> tuple[int, int]:
        out = []
        for n, k, s, p in zip(in_hw, kernel_hw, self.stride, self.padding):
            span = n + 2 * p - k
            if span < 0:
                raise ShapeError(f"kernel {kernel_hw} larger than padded input {in_hw}")
            out.append(span // s + 1)
        return tuple(out)


def _pair(v) -> tuple[int, int]:
    if isinstance(v, (int, np.integer)):
        return (int(v), int(v))
    v = tuple(int(x) for x in v)
    if len(v) != 2:
        raise ShapeError(f"expected two values, got {v}")
    return v


@dataclass(frozen=True)
class ConvFactorPair:
    """Kronecker factors ``a: F1 x C1 x Kh1 x Kw1`` and ``b: F2 x C2 x Kh2 x Kw2``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a, b = as_tensor(self.a), as_tensor(self.b)
        if a.ndim != 4 or b.ndim != 4:
            raise ShapeError(f"conv factors must be 4-D, got {a.shape} and {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def weight_shape(self) -> tuple[int, ...]:
        return tuple(p * q for p, q in zip(self.a.shape, self.b.shape))

    def weight(self) -> np.ndarray:
        return kron(self.a, self.b)


class MacCounter:
    """Accumulates multiply-accumulate counts of the contractions actually run."""

    def __init__(self):
        self.total = 0
        self.by_stage: dict[str, int] = {}

    def add(self, stage: str, outputs: int, reduction: int) -> None:
        n = int(outputs) * int(reduction)
        self.total += n
        self.by_stage[stage] = self.by_stage.get(stage, 0) + n


def _check_input(x, channels: int) -> np.ndarray:
    x = as_tensor(x)
    if x.ndim != 3:
        raise ShapeError(f"input must be C x H x W, got {x.shape}")
    if x.shape[0] != channels:
        raise ShapeError(f"input has {x.shape[0]} channels, weight expects {channels}")
    return x


def _pad(x: np.ndarray, padding: tuple[int, int]) -> np.ndarray:
    ph, pw = padding
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw)))


def _add_bias(y: np.ndarray, bias) -> np.ndarray:
    if bias is None:
        return y
    bias = np.asarray(bias, dtype=np.float64)
    if bias.shape != (y.shape[0],):
        raise ShapeError(f"bias must have shape ({y.shape[0]},), got {bias.shape}")
    return y + bias[:, None, None]


def conv2d_direct(
    w, x, g: ConvGeometry = ConvGeometry(), counter: MacCounter | None = None, bias=None
) -> np.ndarray:
    """Cross-correlation of ``x`` (C x H x W) with ``w`` (F x C x Kh x Kw), plus optional per-filter bias."""
    w = as_tensor(w)
    if w.ndim != 4:
        raise ShapeError(f"weight must be F x C x Kh x Kw, got {w.shape}")
    f, c, kh, kw = w.shape
    x = _check_input(x, c)
    ho, wo = g.output_size(x.shape[1:], (kh, kw))
    sh, sw = g.stride
    windows = sliding_window_view(_pad(x, g.padding), (kh, kw), axis=(1, 2))
    windows = windows[:, : (ho - 1) * sh + 1 : sh, : (wo - 1) * sw + 1 : sw]
    if counter is not None:
        counter.add("direct", f * ho * wo, c * kh * kw)
    return _add_bias(np.einsum("fcij,cxyij->fxy", w, windows, optimize=True), bias)


def _stage_one(b: np.ndarray, xp: np.ndarray, c1: int, counter: MacCounter | None) -> np.ndarray:
    f2, c2, kh2, kw2 = b.shape
    grouped = xp.reshape((c1, c2) + xp.shape[1:])
    windows = sliding_window_view(grouped, (kh2, kw2), axis=(2, 3))
    if counter is not None:
        counter.add("stage1", f2 * c1 * windows.shape[2] * windows.shape[3], c2 * kh2 * kw2)
    # -> F2 x C1 x H1 x W1
    return np.einsum("fcij,gcxyij->fgxy", b, windows, optimize=True)


def _stage_two(
    a: np.ndarray,
    y1: np.ndarray,
    dilation: tuple[int, int],
    stride: tuple[int, int],
    out_hw: tuple[int, int],
    counter: MacCounter | None,
) -> np.ndarray:
    f1, c1, kh1, kw1 = a.shape
    f2 = y1.shape[0]
    ho, wo = out_hw
    dh, dw = dilation
    sh, sw = stride
    out = np.zeros((f1, f2, ho, wo))
    # A is shared by all F2 maps; each kernel tap reads a strided view of y1
    for i in range(kh1):
        for j in range(kw1):
            tap = y1[:, :, i * dh : i * dh + (ho - 1) * sh + 1 : sh, j * dw : j * dw + (wo - 1) * sw + 1 : sw]
            out += np.einsum("pc,qcxy->pqxy", a[:, :, i, j], tap, optimize=True)
    if counter is not None:
        counter.add("stage2", f1 * f2 * ho * wo, c1 * kh1 * kw1)
    return out.reshape(f1 * f2, ho, wo)


def kron_conv_forward(
    pair: ConvFactorPair, x, g: ConvGeometry = ConvGeometry(), counter: MacCounter | None = None
) -> np.ndarray:
    """Convolve ``x`` with ``kron(pair.a, pair.b)`` directly from the factors."""
    a, b = pair.a, pair.b
    f, c, kh, kw = pair.weight_shape
    x = _check_input(x, c)
    out_hw = g.output_size(x.shape[1:], (kh, kw))
    y1 = _stage_one(b, _pad(x, g.padding), a.shape[1], counter)
    return _stage_two(a, y1, b.shape[2:], g.stride, out_hw, counter)


def _as_pairs(d) -> list[ConvFactorPair]:
    if isinstance(d, GkpdDecomposition):
        return [ConvFactorPair(a, b) for a, b in d]
    return [p if isinstance(p, ConvFactorPair) else ConvFactorPair(*p) for p in d]


def kron_conv_sum_forward(
    d: GkpdDecomposition | Iterable[ConvFactorPair],
    x,
    g: ConvGeometry = ConvGeometry(),
    counter: MacCounter | None = None,
    bias=None,
) -> np.ndarray:
    """Sum of :func:`kron_conv_forward` over every term of a decomposition.

    ``bias`` is not part of the decomposition; it is added once to the summed output.
    """
    pairs = _as_pairs(d)
    if not pairs:
        raise ShapeError("need at least one factor pair")
    sa, sb = pairs[0].a.shape, pairs[0].b.shape
    for p in pairs[1:]:
        if p.a.shape != sa or p.b.shape != sb:
            raise ShapeError(f"inconsistent factor shapes {p.a.shape}/{p.b.shape} vs {sa}/{sb}")
    out = kron_conv_forward(pairs[0], x, g, counter)
    for p in pairs[1:]:
        out = out + kron_conv_forward(p, x, g, counter)
    return _add_bias(out, bias)


def kron_matvec(a, b, x) -> np.ndarray:
    """``kron(a, b) @ x`` for matrices ``a``, ``b`` without forming the product.

    Uses column-stacking ``vec``: ``x = vec(X)`` with ``X`` of shape
    ``(cols(b), cols(a))`` and the result is ``vec(b @ X @ a.T)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("kron_matvec factors must be matrices")
    n1, n2 = a.shape[1], b.shape[1]
    if x.size != n1 * n2:
        raise ShapeError(f"vector length {x.size} != {n1} * {n2}")
    xmat = x.reshape(n1, n2).T  # column-stacked vec -> n2 x n1
    y = b @ xmat @ a.T
    return y.T.reshape(-1)


def default_g(j: np.ndarray, k: np.ndarray, b_n: np.ndarray) -> np.ndarray:
    return j * b_n + k


def lemma1_check(
    a,
    b,
    x,
    offsets=None,
    g: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] = default_g,
) -> bool:
    """Check ``W[i] * x[i + o] == A[j] * B[k] * x[g(j, k) + o]`` for every index.

    ``W = kron(a, b)``, ``j = i // b.shape`` and ``k = i % b.shape`` per
    dimension.  Comparison is exact.  ``g`` is injectable so the check can be
    run against a deliberately wrong re-indexing.
    """
    a, b, x = as_tensor(a), as_tensor(b), as_tensor(x)
    if not a.ndim == b.ndim == x.ndim:
        raise ShapeError("a, b and x must have the same number of dimensions")
    w = kron(a, b)
    o = np.zeros(w.ndim, dtype=np.intp) if offsets is None else np.asarray(offsets, dtype=np.intp)
    if o.shape != (w.ndim,) or np.any(o < 0):
        raise ShapeError(f"offsets must be {w.ndim} non-negative integers")
    if np.any(np.array(w.shape) + o > np.array(x.shape)):
        raise ShapeError(f"offsets {tuple(o)} push {w.shape} outside input {x.shape}")
    idx = np.indices(w.shape).reshape(w.ndim, -1)
    bs = np.array(b.shape)[:, None]
    j, k = idx // bs, idx % bs
    lhs = w[tuple(idx)] * x[tuple(idx + o[:, None])]
    gi = g(j, k, bs) + o[:, None]
    if np.any(gi < 0) or np.any(gi >= np.array(x.shape)[:, None]):
        return False
    rhs = a[tuple(j)] * b[tuple(k)] * x[tuple(gi)]
    return bool(np.array_equal(lhs, rhs))
