"""Singular value decomposition by one-sided Jacobi rotations.

The production path orthogonalises the columns of the (possibly transposed)
input with Hestenes' one-sided Jacobi method, using a round-robin pairing so
that each round applies ``n // 2`` disjoint rotations as one vectorised step.

:func:`reference_singular_values` is a deliberately different, slower route
(cyclic two-sided Jacobi on the Gram matrix) kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError, ShapeError
from .tensor import check_finite

MAX_SWEEPS = 60
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m ~= u @ diag(s) @ v.T``; ``s`` is non-increasing."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.s)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or 0 in m.shape:
        raise ShapeError(f"expected a non-empty matrix, got shape {m.shape}")
    check_finite(m, "matrix")
    return m


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one sweep: every pair (p, q), p < q, appears exactly once.

    Circle method; with odd ``n`` a dummy index ``n`` sits out each round.
    """
    size = n + (n % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for k in range(size // 2):
            i, j = players[k], players[size - 1 - k]
            if i < n and j < n:
                p.append(min(i, j))
                q.append(max(i, j))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _one_sided_jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalise the columns of ``a`` (m >= n). Returns (a @ v, v)."""
    m, n = a.shape
    # columns are stored as rows so pair gathers stay contiguous
    at = np.array(a.T, order="C")
    vt = np.eye(n)
    if n == 1:
        return at.T, vt.T
    tol = _EPS * max(m, n)
    # column pairs whose norm product is below this are numerically zero
    floor = ((1e-300 + np.sum(at * at)) * _EPS**2) ** 2
    rounds = _round_robin(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p, q in rounds:
            if len(p) == 0:
                continue
            ap, aq = at[p], at[q]
            alpha = np.einsum("ij,ij->i", ap, ap)
            beta = np.einsum("ij,ij->i", aq, aq)
            gamma = np.einsum("ij,ij->i", ap, aq)
            active = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (alpha * beta > floor)
            if not active.any():
                continue
            rotated = True
            if not active.all():
                p, q = p[active], q[active]
                ap, aq = ap[active], aq[active]
                alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t[zeta == 0] = 1.0
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = c * t[:, None]
            at[p] = c * ap - s * aq
            at[q] = s * ap + c * aq
            vp, vq = vt[p], vt[q]
            vt[p] = c * vp - s * vq
            vt[q] = s * vp + c * vq
        if not rotated:
            return at.T, vt.T
    raise NumericError(f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")


def _complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace columns of ``u`` not in ``keep`` by an orthonormal completion."""
    m, r = u.shape
    basis = [u[:, k] for k in range(r) if keep[k]]
    out = u.copy()
    candidates = iter(np.eye(m))
    for k in range(r):
        if keep[k]:
            continue
        while True:
            e = next(candidates)
            for _ in range(2):  # re-orthogonalise once for stability
                for b in basis:
                    e = e - (b @ e) * b
            norm = np.linalg.norm(e)
            if norm > 1e-8:
                break
        e = e / norm
        basis.append(e)
        out[:, k] = e
    return out


def _fix_signs(u: np.ndarray, v: np.ndarray) -> None:
    # first nonzero entry of each left singular vector is made non-negative
    for k in range(u.shape[1]):
        col = u[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            u[:, k] = -col
            v[:, k] = -v[:, k]


def svd_full(m) -> SvdResult:
    """Thin SVD with ``r = min(rows, cols)`` singular triplets."""
    m = _as_matrix(m)
    rows, cols = m.shape
    transposed = rows < cols
    work = m.T if transposed else m
    av, v = _one_sided_jacobi(work)
    s = np.linalg.norm(av, axis=0)
    order = np.argsort(-s, kind="stable")
    s, av, v = s[order], av[:, order], v[:, order]
    keep = s > (s[0] if s[0] > 0 else 1.0) * _EPS * max(rows, cols)
    u = np.zeros_like(av)
    u[:, keep] = av[:, keep] / s[keep]
    if not keep.all():
        u = _complete_basis(u, keep)
    if transposed:
        u, v = v, u
    u = np.ascontiguousarray(u)
    v = np.ascontiguousarray(v)
    _fix_signs(u, v)
    return SvdResult(u=u, s=s, v=v)


def svd_truncated(m, rank: int) -> SvdResult:
    """Leading ``rank`` singular triplets of ``m``."""
    m = _as_matrix(m)
    rank = int(rank)
    if not 1 <= rank <= min(m.shape):
        raise ParameterError(f"rank must lie in [1, {min(m.shape)}], got {rank}")
    full = svd_full(m)
    return SvdResult(
        u=full.u[:, :rank].copy(), s=full.s[:rank].copy(), v=full.v[:, :rank].copy()
    )


def tail_energy(s: np.ndarray, rank: int) -> float:
    """Sum of squared singular values beyond the first ``rank``."""
    return float(np.sum(np.asarray(s[rank:]) ** 2))


def reference_singular_values(m, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Singular values via cyclic Jacobi eigenvalue iteration on ``m.T @ m``.

    Slow and loses accuracy for small singular values; intended for tests only.
    """
    m = _as_matrix(m)
    if m.shape[0] < m.shape[1]:
        m = m.T
    g = m.T @ m
    n = g.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(g, -1) ** 2))
        if off <= tol * np.sqrt(np.sum(g * g)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if g[p, q] == 0.0:
                    continue
                theta = 0.5 * np.arctan2(2.0 * g[p, q], g[q, q] - g[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                g = rot.T @ g @ rot
    eig = np.clip(np.diag(g), 0.0, None)
    return np.sort(np.sqrt(eig))[::-1]
