"""Abelianized relation data: exponent sums, Smith form, ℤ-surjection.

Killing commutators turns a presentation into an integer matrix whose
row i records the net exponent of each generator in relator i. The
cokernel invariants (betti number, torsion chain) come from the Smith
normal form; whether the group surjects onto the integers is exactly
the question whether that matrix has rational rank below m.

The rank decision is tiered because sweeps push it to millions of
relators against thousands of generators:

  1. structural certificates: no relators, fewer nonzero rows than
     generators, a generator with zero exponent everywhere, or all row
     sums zero (send every generator to 1). All exact.
  2. rank mod a prime of a compressed matrix: the rows are randomly
     partitioned into m + 64 balanced buckets and each bucket summed
     with random nonzero coefficients. Compression only ever loses
     rank, so full rank of the compressed matrix proves full rational
     rank, settling the question exactly. A plain row sample would
     not work here: with short relators it misses columns outright.
  3. exact integer elimination when the instance is small enough.
  4. otherwise a second prime (and a fresh random compression). A
     deficit surviving both probes is reported as non-surjection with
     exact=False; the error probability is tiny but not zero, and the
     report says which route decided.

Smith normal form itself always runs in arbitrary-precision integers;
intermediate growth is unbounded even for small matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._modrank import (PRIME_A, PRIME_B, _eliminate, _red, rank_mod_p,
                       rank_mod_p_stream)
from .errors import CapExceededError
from .model import Presentation

# exact integer elimination is the default up to this many generators
RANK_EXACT_MAX = 512
# extra buckets beyond m in the modular compression probe
_SUB_EXTRA = 64
# above this many rows (relative to m) the exact fallback is skipped
_EXACT_ROW_FACTOR = 20
_DENSE_CAP = 2 * 10**8
_CHUNK = 8192


@dataclass(frozen=True)
class AbelianInvariants:
    betti: int
    torsion: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {"betti": self.betti, "torsion": list(self.torsion)}


@dataclass(frozen=True)
class ZSurjectionReport:
    surjects: bool
    exact: bool
    method: str


def exponent_matrix(pres: Presentation) -> np.ndarray:
    """Dense |R| x m matrix of signed occurrence counts.

    Meant for direct inspection and the exact computations; the rank
    tier streams a sparse form instead and never calls this on sweep-
    scale input.
    """
    k = len(pres)
    if k * pres.m > _DENSE_CAP:
        raise CapExceededError(
            f"dense exponent matrix would hold {k * pres.m} entries")
    out = np.zeros((k, pres.m), dtype=np.int64)
    if k:
        rows, cols, vals = _exponent_entries(pres)
        out[rows, cols] = vals
    return out


def _exponent_entries(pres: Presentation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sparse triplets (relator id, generator index 0-based, exponent),
    zero exponents dropped, row ids ascending."""
    mat = pres.relator_matrix
    k = len(mat)
    if k == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), z.copy()
    rid = np.repeat(np.arange(k, dtype=np.int64), pres.ell)
    gen = (np.abs(mat) - 1).astype(np.int64).ravel()
    sign = np.where(mat > 0, 1.0, -1.0).ravel()
    key = rid * pres.m + gen
    uniq, inverse = np.unique(key, return_inverse=True)
    sums = np.bincount(inverse, weights=sign)
    vals = np.rint(sums).astype(np.int64)
    keep = vals != 0
    return uniq[keep] // pres.m, uniq[keep] % pres.m, vals[keep]


# ------------------------------------------------------------- Smith form

def smith_normal_form(M) -> tuple[int, ...]:
    """Nonzero diagonal of the Smith form, each entry dividing the next.

    Plain integer pivoting: move a least-magnitude entry to the corner,
    shrink its row and column by remainder steps until both are clear,
    then make the pivot divide the rest of the submatrix before moving
    on. Termination: every disturbance strictly shrinks the pivot.
    """
    if isinstance(M, np.ndarray):
        A = [[int(x) for x in row] for row in M]
    else:
        A = [[int(x) for x in row] for row in M]
    n = len(A)
    m = len(A[0]) if n else 0
    diags: list[int] = []
    t = 0
    while t < n and t < m:
        best = None
        for i in range(t, n):
            row = A[i]
            for j in range(t, m):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
        if best is None:
            break
        _, bi, bj = best
        A[t], A[bi] = A[bi], A[t]
        if bj != t:
            for row in A:
                row[t], row[bj] = row[bj], row[t]
        while True:
            disturbed = False
            for i in range(t + 1, n):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    if q:
                        At = A[t]
                        A[i] = [a - q * b for a, b in zip(A[i], At)]
                    if A[i][t]:
                        A[t], A[i] = A[i], A[t]
                        disturbed = True
            for j in range(t + 1, m):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    if q:
                        for row in A:
                            row[j] -= q * row[t]
                    if A[t][j]:
                        for row in A:
                            row[t], row[j] = row[j], row[t]
                        disturbed = True
            if disturbed:
                continue
            d = A[t][t]
            culprit = None
            for i in range(t + 1, n):
                row = A[i]
                for j in range(t + 1, m):
                    if row[j] % d:
                        culprit = i
                        break
                if culprit is not None:
                    break
            if culprit is None:
                break
            A[t] = [a + b for a, b in zip(A[t], A[culprit])]
        diags.append(abs(A[t][t]))
        t += 1
    return tuple(diags)


# ------------------------------------------- exact integer row reduction

def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """g, x, y with a*x + b*y = g = gcd(a, b), g > 0 for nonzero input."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


_INT64_SAFE = 2**62


class IntegerRowBasis:
    """Streaming row-lattice accumulator over the integers.

    Incoming rows are folded against one stored pivot row per column
    using Bezout combinations, which are unimodular on the row pair, so
    the stored rows always generate the same lattice as everything fed
    in. Rows live in int64 vectors while a conservative bound allows
    it and silently promote to arbitrary precision lists beyond that.
    """

    def __init__(self, m: int):
        self.m = m
        self.pivots: dict[int, object] = {}
        self.big = False

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def _promote(self) -> None:
        if not self.big:
            self.pivots = {j: [int(x) for x in row]
                           for j, row in self.pivots.items()}
            self.big = True

    def add(self, row) -> bool:
        """Fold one row in; True if the rank grew."""
        if self.big:
            v = [int(x) for x in row]
        else:
            v = np.asarray(row, dtype=np.int64).copy()
        while True:
            if self.big:
                j = next((i for i, x in enumerate(v) if x), None)
            else:
                nz = np.nonzero(v)[0]
                j = int(nz[0]) if len(nz) else None
            if j is None:
                return False
            piv = self.pivots.get(j)
            if piv is None:
                if self.big:
                    if v[j] < 0:
                        v = [-x for x in v]
                else:
                    if v[j] < 0:
                        v = -v
                self.pivots[j] = v
                return True
            a = int(piv[j])
            b = int(v[j])
            if b % a == 0:
                q = b // a
                if self.big:
                    v = [x - q * y for x, y in zip(v, piv)]
                else:
                    bound = abs(q) * int(np.abs(piv).max()) + int(np.abs(v).max())
                    if bound >= _INT64_SAFE:
                        self._promote()
                        piv = self.pivots[j]
                        v = [int(x) - q * y for x, y in zip(v, piv)]
                    else:
                        v = v - q * piv
            else:
                g, x, y = _xgcd(a, b)
                qa, qb = a // g, b // g
                if self.big:
                    new_piv = [x * pa + y * vb for pa, vb in zip(piv, v)]
                    v = [qa * vb - qb * pa for pa, vb in zip(piv, v)]
                    self.pivots[j] = new_piv
                else:
                    ma = int(np.abs(piv).max())
                    mb = int(np.abs(v).max())
                    big_coeff = max(abs(x), abs(qb)) * ma + \
                        max(abs(y), abs(qa)) * mb
                    if big_coeff >= _INT64_SAFE:
                        self._promote()
                        piv_l = self.pivots[j]
                        v_l = [int(t_) for t_ in v]
                        new_piv = [x * pa + y * vb
                                   for pa, vb in zip(piv_l, v_l)]
                        v = [qa * vb - qb * pa
                             for pa, vb in zip(piv_l, v_l)]
                        self.pivots[j] = new_piv
                    else:
                        new_piv = x * piv + y * v
                        v = qa * v - qb * piv
                        self.pivots[j] = new_piv

    def matrix(self) -> list[list[int]]:
        """Stored rows by pivot column; generates the input row lattice."""
        return [[int(x) for x in self.pivots[j]]
                for j in sorted(self.pivots)]


# ----------------------------------------------------- rank / surjection

def _dense_rows(entries, ids: np.ndarray, m: int) -> np.ndarray:
    rows, cols, vals = entries
    member = np.isin(rows, ids)
    local = np.searchsorted(ids, rows[member])
    out = np.zeros((len(ids), m), dtype=np.int64)
    out[local, cols[member]] = vals[member]
    return out


def _chunks_of_rows(entries, ids: np.ndarray, m: int) -> Iterator[np.ndarray]:
    for lo in range(0, len(ids), _CHUNK):
        yield _dense_rows(entries, ids[lo:lo + _CHUNK], m)


def _exact_rank(entries, ids: np.ndarray, m: int) -> int:
    basis = IntegerRowBasis(m)
    for chunk in _chunks_of_rows(entries, ids, m):
        for row in chunk:
            basis.add(row)
            if basis.rank == m:
                return m
    return basis.rank


def _compressed_probe_rank(entries, nz_ids: np.ndarray, m: int, p: int,
                           seed: int) -> int:
    """Rank mod p of a random (m + 64) x m compression of the rows.

    Every nonzero row lands in exactly one bucket with a random
    nonzero coefficient, so the compressed rows lie in the row space
    and the result never exceeds the true rank mod p. Bucket sums are
    accumulated exactly in float64: each term is below 4 * p and a
    column meets far fewer rows than 2^53 / (4 * p) in any workable
    instance.
    """
    rows, cols, vals = entries
    kn = len(nz_ids)
    n_buckets = m + _SUB_EXTRA
    rng = np.random.default_rng(seed)
    bucket_of = np.empty(kn, dtype=np.int64)
    bucket_of[rng.permutation(kn)] = np.arange(kn, dtype=np.int64) % n_buckets
    coeff = rng.integers(1, p, size=kn, dtype=np.int64)
    pos = np.searchsorted(nz_ids, rows)
    key = bucket_of[pos] * m + cols
    weights = coeff[pos].astype(np.float64) * vals
    S = np.bincount(key, weights=weights, minlength=n_buckets * m)
    S = _red(S.reshape(n_buckets, m), p)
    rank, _ = _eliminate(S, p, want_basis=False)
    return rank


def surjects_onto_Z_details(pres: Presentation) -> ZSurjectionReport:
    """Full report of the ℤ-surjection decision: verdict, exactness,
    and which tier settled it."""
    m = pres.m
    if len(pres) == 0:
        return ZSurjectionReport(True, True, "no_relators")
    entries = _exponent_entries(pres)
    rows, cols, vals = entries
    nz_ids = np.unique(rows)
    kn = len(nz_ids)
    if kn < m:
        return ZSurjectionReport(True, True, "fewer_nonzero_rows_than_generators")
    col_hit = np.zeros(m, dtype=bool)
    col_hit[cols] = True
    if not col_hit.all():
        return ZSurjectionReport(True, True, "zero_exponent_column")
    row_sums = np.bincount(rows, weights=vals.astype(np.float64))
    if not row_sums.any():
        # sending every generator to 1 kills every relator
        return ZSurjectionReport(True, True, "total_exponent_sums_all_zero")

    if kn <= m + _SUB_EXTRA:
        direct = _dense_rows(entries, nz_ids, m)
        if rank_mod_p(direct, PRIME_A) == m:
            return ZSurjectionReport(False, True, "full_rank_mod_p")
        if m <= RANK_EXACT_MAX:
            rank = _exact_rank(entries, nz_ids, m)
            return ZSurjectionReport(rank < m, True, "integer_elimination")
        # the probe already saw every row; only the prime can be unlucky
        if rank_mod_p(direct, PRIME_B) == m:
            return ZSurjectionReport(False, True, "full_rank_mod_p")
        return ZSurjectionReport(True, False, "rank_deficient_mod_two_primes")

    if _compressed_probe_rank(entries, nz_ids, m, PRIME_A, 0x5EED1) == m:
        return ZSurjectionReport(False, True, "full_rank_mod_p")

    if m <= RANK_EXACT_MAX:
        if kn <= _EXACT_ROW_FACTOR * m:
            rank = _exact_rank(entries, nz_ids, m)
            return ZSurjectionReport(rank < m, True, "integer_elimination")
        if rank_mod_p_stream(_chunks_of_rows(entries, nz_ids, m), m,
                             PRIME_A) == m:
            return ZSurjectionReport(False, True, "full_rank_mod_p")
        if rank_mod_p_stream(_chunks_of_rows(entries, nz_ids, m), m,
                             PRIME_B) == m:
            return ZSurjectionReport(False, True, "full_rank_mod_p")
        return ZSurjectionReport(True, False, "rank_deficient_mod_two_primes")

    if _compressed_probe_rank(entries, nz_ids, m, PRIME_B, 0x5EED2) == m:
        return ZSurjectionReport(False, True, "full_rank_mod_p")
    return ZSurjectionReport(True, False,
                             "aggregated_rank_deficient_mod_two_primes")


def surjects_onto_Z(pres: Presentation) -> bool:
    """True iff the abelianization maps onto ℤ (rational rank below m)."""
    return surjects_onto_Z_details(pres).surjects


def abelian_invariants(pres: Presentation) -> AbelianInvariants:
    """Betti number and torsion chain of the abelianization, exactly.

    The row lattice is first compressed to at most m generating rows by
    exact integer elimination, then handed to the Smith form. Cost
    grows with the relator count; sweep budgets gate calls at scale.
    """
    m = pres.m
    if len(pres) == 0:
        return AbelianInvariants(betti=m, torsion=())
    if m * min(m, len(pres)) > _DENSE_CAP:
        raise CapExceededError(
            f"dense row basis would need {m} x {min(m, len(pres))} entries; "
            f"cap is {_DENSE_CAP}")
    entries = _exponent_entries(pres)
    ids = np.unique(entries[0])
    basis = IntegerRowBasis(m)
    for chunk in _chunks_of_rows(entries, ids, m):
        for row in chunk:
            basis.add(row)
    diags = smith_normal_form(basis.matrix())
    betti = m - len(diags)
    torsion = tuple(int(d) for d in diags if d > 1)
    return AbelianInvariants(betti=betti, torsion=torsion)
