"""Freeness certificates by iterated generator elimination.

If some generator a has exactly one occurrence (as a or a^-1) across
the whole relator set, the relator r holding it expresses a in terms of
the other generators: dropping both a and r is a Tietze move, so the
group is unchanged up to isomorphism. Repeating until no relators
remain certifies the group free of rank m - |R|. The certificate is the
exact sequence of (generator, relator) steps and can be replayed by an
independent checker.

Elimination can stall; that is a legitimate outcome carrying no verdict
on the group itself (downstream it is reported as Unknown, possibly
with a splitting witness from unused generators).

Order convention: always eliminate the smallest admissible generator
index. The admissible relator is then forced, since the generator's
single occurrence pins it. A fixed order makes certificates a pure
function of the presentation.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .model import Presentation
from .words import Word, word_key


@dataclass(frozen=True)
class EliminationCertificate:
    steps: tuple[tuple[int, Word], ...]
    final_rank: int

    def to_json_dict(self) -> dict:
        return {
            "steps": [{"generator": g, "relator": list(r)}
                      for g, r in self.steps],
            "final_rank": self.final_rank,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "EliminationCertificate":
        steps = tuple((int(s["generator"]), tuple(int(x) for x in s["relator"]))
                      for s in d["steps"])
        return cls(steps=steps, final_rank=int(d["final_rank"]))


class StuckReport:
    """Irreducible residue left when no admissible pair exists.

    rank_negative flags the regime where more relators remain than
    generators, so no elimination order could ever have finished.
    """

    __slots__ = ("remaining_matrix", "remaining_generators", "reason",
                 "rank_negative", "_remaining")

    def __init__(self, remaining_matrix: np.ndarray,
                 remaining_generators: tuple[int, ...], reason: str):
        if len(remaining_matrix) == 0:
            raise ValueError("a stuck report needs at least one relator")
        self.remaining_matrix = remaining_matrix
        self.remaining_generators = remaining_generators
        self.reason = reason
        self.rank_negative = len(remaining_matrix) > len(remaining_generators)
        self._remaining: Optional[tuple[Word, ...]] = None

    @property
    def remaining_relators(self) -> tuple[Word, ...]:
        if self._remaining is None:
            self._remaining = tuple(
                tuple(int(x) for x in row) for row in self.remaining_matrix)
        return self._remaining

    @property
    def n_remaining(self) -> int:
        return len(self.remaining_matrix)

    def __repr__(self) -> str:
        return (f"StuckReport(n_remaining={self.n_remaining}, "
                f"n_generators={len(self.remaining_generators)}, "
                f"rank_negative={self.rank_negative})")

    def to_json_dict(self) -> dict:
        return {
            "stuck": True,
            "reason": self.reason,
            "remaining_generators": list(self.remaining_generators),
            "remaining_relators": [list(w) for w in self.remaining_relators],
            "rank_negative": self.rank_negative,
        }


def find_elimination(
    relators: Iterable[Word],
    active_generators: Optional[Iterable[int]] = None,
) -> Optional[tuple[int, Word]]:
    """Smallest generator with a single occurrence overall, with its relator.

    Returns None when every generator occurs zero or at least two times.
    """
    rels = list(relators)
    counts = Counter(abs(x) for r in rels for x in r)
    allowed = None if active_generators is None else set(active_generators)
    candidates = [g for g, c in counts.items()
                  if c == 1 and (allowed is None or g in allowed)]
    if not candidates:
        return None
    g = min(candidates)
    # the single occurrence pins the relator
    r = next(r for r in rels if any(abs(x) == g for x in r))
    return g, r


def certify_free(pres: Presentation) -> EliminationCertificate | StuckReport:
    """Run the elimination to completion or to a stuck state.

    Incidence bookkeeping is incremental: per-generator occurrence
    totals plus the sum of relator ids over occurrences. When a
    generator's total hits 1 the id sum IS the id of its relator, so
    each step costs O(ell log m) and a million-relator presentation
    that stalls immediately is detected in one pass.
    """
    m = pres.m
    k0 = len(pres)
    if k0 == 0:
        return EliminationCertificate(steps=(), final_rank=m)

    mat = pres.relator_matrix
    gens = np.abs(mat).astype(np.int64)
    flat = gens.ravel()
    counts = np.bincount(flat, minlength=m + 1)
    rid_of_cell = np.repeat(np.arange(k0, dtype=np.int64), pres.ell)
    # max possible sum ell * k^2 stays far below 2^53, so float64
    # accumulation is exact here
    rid_sum = np.bincount(flat, weights=rid_of_cell.astype(np.float64),
                          minlength=m + 1).astype(np.int64)

    active_gen = np.ones(m + 1, dtype=bool)
    active_gen[0] = False
    active_rel = np.ones(k0, dtype=bool)
    heap = [g for g in range(1, m + 1) if counts[g] == 1]
    heapq.heapify(heap)

    steps: list[tuple[int, Word]] = []
    remaining = k0
    while remaining:
        g = None
        while heap:
            cand = heapq.heappop(heap)
            if active_gen[cand] and counts[cand] == 1:
                g = cand
                break
        if g is None:
            rem_matrix = mat[active_rel]
            rem_gens = tuple(int(v) for v in np.nonzero(active_gen)[0])
            return StuckReport(rem_matrix, rem_gens,
                               reason="no admissible generator-relator pair")
        rid = int(rid_sum[g])
        row = gens[rid]
        steps.append((g, tuple(int(x) for x in mat[rid])))
        np.subtract.at(counts, row, 1)
        np.subtract.at(rid_sum, row, rid)
        active_gen[g] = False
        active_rel[rid] = False
        remaining -= 1
        for cand in np.unique(row):
            if active_gen[cand] and counts[cand] == 1:
                heapq.heappush(heap, int(cand))

    return EliminationCertificate(steps=tuple(steps), final_rank=m - k0)


def replay_certificate(pres: Presentation, cert: EliminationCertificate) -> bool:
    """Independent admissibility check of every step, from scratch.

    True only if each step eliminates a generator with exactly one
    occurrence across the then-remaining relators, that occurrence sits
    in the claimed relator, the relator is still present, and the steps
    consume the whole relator set with the stated final rank.
    """
    remaining = Counter(pres.relators)
    counts = Counter(abs(x) for r in pres.relators for x in r)
    eliminated: set[int] = set()

    for g, r in cert.steps:
        if not (1 <= g <= pres.m) or g in eliminated:
            return False
        if remaining[r] != 1:
            return False
        if counts[g] != 1:
            return False
        if sum(1 for x in r if abs(x) == g) != 1:
            return False
        del remaining[r]
        for x in r:
            counts[abs(x)] -= 1
        eliminated.add(g)

    if remaining:
        return False
    return cert.final_rank == pres.m - len(pres)


def naive_certify(pres: Presentation) -> EliminationCertificate | StuckReport:
    """Reference elimination built directly on find_elimination.

    Kept as the slow mirror of certify_free; tests hold the two equal
    on random presentations.
    """
    rels = list(pres.relators)
    active = set(range(1, pres.m + 1))
    steps: list[tuple[int, Word]] = []
    while rels:
        hit = find_elimination(rels, active)
        if hit is None:
            matrix = np.array(sorted(rels, key=word_key), dtype=np.int64)
            return StuckReport(matrix, tuple(sorted(active)),
                               reason="no admissible generator-relator pair")
        g, r = hit
        steps.append((g, r))
        rels.remove(r)
        active.discard(g)
    return EliminationCertificate(steps=tuple(steps), final_rank=pres.m - len(pres))
