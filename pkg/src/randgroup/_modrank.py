"""Dense matrix rank over a prime field, in float64 BLAS.

The prime sits below 2^19, so a product of two reduced entries is
under 2^38 and a float64 cell can absorb one such product per pivot,
about 30000 of them, before leaving the exact-integer window below
2^53. Modular reductions are therefore deferred: cells accumulate raw
integer values across updates and are reduced only when a pivot
actually needs them. Off-pivot cells merely stay congruent to the true
values, which is all a rank computation ever reads.

Elimination is blocked twice: 64-column panels inside a 512-column
slab copied out for cache locality, then one large product per slab to
update the trailing block. The heavy work is that product, so
throughput is BLAS-bound; a 10^4-square rank takes seconds.

Used as the fast layer of the rational-rank decision: full rank mod p
certifies full rank over the rationals outright, while a deficit is
only evidence and the caller escalates.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

PRIME_A = 524287
PRIME_B = 524269
_INNER = 64
_OUTER = 512
# (_MAX_DIM + _OUTER + _INNER) * (PRIME_A - 1)^2 < 2^53
_MAX_DIM = 30000


def _red(a: np.ndarray, p: int) -> np.ndarray:
    """a mod p into [0, p), elementwise, for exact-integer float64 input.

    Multiply-floor beats fmod by an order of magnitude here. The
    computed quotient can be off by one either way, so two masked
    fixups finish the job; everything stays exact because q*p is below
    2^52.
    """
    q = np.floor(a * (1.0 / p))
    r = a - q * p
    np.add(r, p, out=r, where=r < 0)
    np.subtract(r, p, out=r, where=r >= p)
    return r


def _sweep_and_update(M: np.ndarray, L: np.ndarray, top: int, mid: int,
                      j1: int, p: int) -> None:
    """Forward-substitute the pivot rows' trailing parts, then one
    product pushes every update below. Rows top..mid hold the pivots L
    describes; everything past column j1 is the trailing block."""
    npiv = mid - top
    for t in range(npiv):
        coeff = L[t, :t]
        if t and coeff.any():
            M[top + t, j1:] -= coeff @ M[top:top + t, j1:]
        M[top + t, j1:] = _red(M[top + t, j1:], p)
    if mid < M.shape[0]:
        M[mid:, j1:] -= L[npiv:] @ M[top:mid, j1:]


def _eliminate(M: np.ndarray, p: int, want_basis: bool) -> tuple[int, Optional[np.ndarray]]:
    """In-place blocked elimination of M (float64, entries in [0, p)).

    Returns the rank and, when asked, a reduced row-space basis mod p
    in echelon form.
    """
    n, m = M.shape
    if min(n, m) > _MAX_DIM:
        raise ValueError(f"dimension {min(n, m)} exceeds the exactness bound "
                         f"{_MAX_DIM} for p={p}")
    r = 0
    for big0 in range(0, m, _OUTER):
        if r >= n:
            break
        big1 = min(big0 + _OUTER, m)
        R0 = r
        S = np.ascontiguousarray(M[:, big0:big1])
        sw = big1 - big0
        louter: list[np.ndarray] = []
        for j0 in range(0, sw, _INNER):
            if r >= n:
                break
            j1 = min(j0 + _INNER, sw)
            r0 = r
            lcols: list[np.ndarray] = []
            for j in range(j0, j1):
                colred = _red(S[r:, j], p)
                nz = np.nonzero(colred)[0]
                if len(nz) == 0:
                    continue
                pr = r + int(nz[0])
                if pr != r:
                    # partial-width swaps are sound: the skipped left
                    # parts of both rows are multiples of p and are
                    # never read again before the final reduction
                    S[[r, pr], j0:] = S[[pr, r], j0:]
                    M[[r, pr], big1:] = M[[pr, r], big1:]
                    colred[[0, pr - r]] = colred[[pr - r, 0]]
                    for lc in lcols:
                        lc[[r - r0, pr - r0]] = lc[[pr - r0, r - r0]]
                    for lc in louter:
                        lc[[r - R0, pr - R0]] = lc[[pr - R0, r - R0]]
                S[r, j:j1] = _red(S[r, j:j1], p)
                inv = float(pow(int(S[r, j]), p - 2, p))
                mult = _red(colred[1:] * inv, p)
                if j + 1 < j1:
                    S[r + 1:, j + 1:j1] -= np.outer(mult, S[r, j + 1:j1])
                S[r + 1:, j] = 0.0
                lcol = np.zeros(n - r0)
                lcol[r + 1 - r0:] = mult
                lcols.append(lcol)
                r += 1
            if not lcols:
                continue
            if j1 < sw:
                _sweep_and_update(S, np.column_stack(lcols), r0, r, j1, p)
            for lc in lcols:
                full = np.zeros(n - R0)
                full[r0 - R0:] = lc
                louter.append(full)
        M[:, big0:big1] = S
        if louter and big1 < m:
            _sweep_and_update(M, np.column_stack(louter), R0, r, big1, p)
    basis = _red(M[:r], p) if want_basis else None
    return r, basis


def rank_mod_p(A: np.ndarray, p: int = PRIME_A) -> int:
    """Rank of an integer matrix over the field with p elements."""
    if A.size == 0:
        return 0
    M = np.ascontiguousarray(np.asarray(A, dtype=np.int64) % p, dtype=np.float64)
    r, _ = _eliminate(M, p, want_basis=False)
    return r


def rank_mod_p_stream(chunks: Iterable[np.ndarray], m: int,
                      p: int = PRIME_A) -> int:
    """Rank mod p of a tall matrix fed as row chunks.

    Carries a row-space basis (at most m rows) between chunks, so
    memory stays O(m^2 + chunk) however many rows flow through. Stops
    as soon as the rank hits m.
    """
    basis: Optional[np.ndarray] = None
    rank = 0
    for chunk in chunks:
        if chunk.size == 0:
            continue
        C = np.ascontiguousarray(
            np.asarray(chunk, dtype=np.int64) % p, dtype=np.float64)
        M = C if basis is None else np.vstack([basis, C])
        rank, basis = _eliminate(M, p, want_basis=True)
        if rank >= m:
            return rank
    return rank
