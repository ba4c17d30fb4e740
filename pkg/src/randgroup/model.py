"""Random presentation models over a fixed relator length.

Three samplers share one presentation type:

* binomial: every cyclically reduced word of length ell is a relator
  independently with probability p.
* positive: same, but over the m^ell words using only positive letters.
* uniform_count: exactly floor((2m-1)^(ell*d)) distinct cyclically
  reduced words, uniform over all such sets.

Presentations store their relators as a sorted, duplicate-free int32
matrix of signed letters; the tuple-of-tuples view is materialized
lazily. Sampling is vectorized and exactly uniform: drawing i.i.d.
uniform words and keeping first occurrences until K distinct words are
collected yields a uniform K-subset of the universe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterator

import numpy as np

from .errors import (
    CountExceedsUniverseError,
    DomainError,
    LengthMismatchError,
    NotCyclicallyReducedError,
    PresentationFormatError,
)
from .words import (
    Word,
    count_cyclically_reduced,
    is_cyclically_reduced,
    iter_cyclically_reduced,
    validate_word,
)

MODEL_TAGS = ("binomial", "positive", "uniform_count", "manual")

# below this universe size the definitional per-word Bernoulli process is
# run directly on the enumerated universe
SMALL_UNIVERSE_MAX = 4096

# hard cap on materialized relators; beyond this the K x ell matrix alone
# would dominate memory
MAX_RELATORS = 10**7

_INT64_MAX = 2**63 - 1


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; same seed gives the same stream everywhere."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class ModelParams:
    """Sampler parameters: param is p for the Bernoulli models, d for uniform_count."""

    m: int
    ell: int
    param: float
    seed: int

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("need m >= 1")
        if self.ell < 1:
            raise DomainError("need ell >= 1")


def _codes_to_signed(codes: np.ndarray) -> np.ndarray:
    # code 2*(g-1) is generator g, code 2*(g-1)+1 its inverse
    gens = (codes >> 1) + 1
    return np.where(codes & 1 == 0, gens, -gens).astype(np.int32)


def _signed_to_codes(signed: np.ndarray) -> np.ndarray:
    return (2 * (np.abs(signed) - 1) + (signed < 0)).astype(np.int64)


def _sort_rows(matrix: np.ndarray) -> np.ndarray:
    """Rows sorted by the word order (generator index, positive before inverse)."""
    if matrix.shape[0] <= 1:
        return matrix
    codes = _signed_to_codes(matrix)
    order = np.lexsort(codes.T[::-1])
    return matrix[order]


def _unique_rows_stable(matrix: np.ndarray) -> np.ndarray:
    """Distinct rows, keeping the first occurrence in row order."""
    if matrix.shape[0] <= 1:
        return matrix
    m = np.ascontiguousarray(matrix)
    v = m.view([("", m.dtype)] * m.shape[1]).ravel()
    _, idx = np.unique(v, return_index=True)
    idx.sort()
    return m[idx]


class Presentation:
    """A finite presentation whose relators all have one fixed length.

    Relators are distinct cyclically reduced words, held row-sorted so
    that equal relator sets compare equal and downstream tie-breaking is
    reproducible.
    """

    __slots__ = ("m", "ell", "model_tag", "param", "seed", "notes",
                 "relator_matrix", "_relators")

    def __init__(self, m: int, ell: int, model_tag: str, param: float,
                 seed: int, relator_matrix: np.ndarray,
                 notes: tuple[str, ...] = ()):
        # internal constructor: relator_matrix must already be validated,
        # deduplicated, and sorted (use make_presentation for raw words)
        self.m = m
        self.ell = ell
        self.model_tag = model_tag
        self.param = param
        self.seed = seed
        self.notes = notes
        self.relator_matrix = relator_matrix
        self._relators: tuple[Word, ...] | None = None

    @property
    def relators(self) -> tuple[Word, ...]:
        if self._relators is None:
            self._relators = tuple(
                tuple(int(x) for x in row) for row in self.relator_matrix
            )
        return self._relators

    @property
    def all_positive(self) -> bool:
        return bool((self.relator_matrix > 0).all()) if len(self) else True

    def __len__(self) -> int:
        return self.relator_matrix.shape[0]

    def __iter__(self) -> Iterator[Word]:
        return iter(self.relators)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Presentation):
            return NotImplemented
        return (
            self.m == other.m
            and self.ell == other.ell
            and self.relator_matrix.shape == other.relator_matrix.shape
            and bool((self.relator_matrix == other.relator_matrix).all())
        )

    def __repr__(self) -> str:
        return (f"Presentation(m={self.m}, ell={self.ell}, "
                f"model={self.model_tag!r}, relators={len(self)})")


def make_presentation(m: int, ell: int, relators, model_tag: str = "manual",
                      param: float = 0.0, seed: int = 0,
                      notes: tuple[str, ...] = ()) -> Presentation:
    """Build a presentation from explicit words, validating every relator."""
    if model_tag not in MODEL_TAGS:
        raise DomainError(f"unknown model tag {model_tag!r}")
    rows = []
    for w in relators:
        w = tuple(int(x) for x in w)
        validate_word(w, m)
        if len(w) != ell:
            raise LengthMismatchError(
                f"relator {w} has length {len(w)}, expected {ell}")
        if not is_cyclically_reduced(w):
            raise NotCyclicallyReducedError(f"relator {w} is not cyclically reduced")
        if model_tag == "positive" and any(x < 0 for x in w):
            raise DomainError(f"positive model cannot contain {w}")
        rows.append(w)
    matrix = (np.array(rows, dtype=np.int32) if rows
              else np.empty((0, ell), dtype=np.int32))
    matrix = _sort_rows(_unique_rows_stable(matrix))
    return Presentation(m, ell, model_tag, param, seed, matrix, notes)


def euler_characteristic(pres: Presentation) -> int:
    """1 - (number of generators) + (number of relators)."""
    return 1 - pres.m + len(pres)


def universe_size(m: int, ell: int, positive: bool = False) -> int:
    """Exact size of the sampling universe (arbitrary precision)."""
    if positive:
        return m**ell
    return count_cyclically_reduced(m, ell)


def density_to_p(m: int, ell: int, d: float) -> float:
    """Probability equivalent to density d: p = m^(ell*(d-1))."""
    if not 0.0 < d < 1.0:
        raise DomainError(f"density must lie in (0,1), got {d}")
    if m < 2:
        raise DomainError("density correspondence needs m >= 2")
    return float(m) ** (ell * (d - 1.0))


def p_to_density(m: int, ell: int, p: float) -> float:
    """Inverse of density_to_p: d = 1 + ln(p) / (ell * ln(m))."""
    if not 0.0 < p <= 1.0:
        raise DomainError(f"probability must lie in (0,1], got {p}")
    if m < 2:
        raise DomainError("density correspondence needs m >= 2")
    return 1.0 + math.log(p) / (ell * math.log(m))


# ---------------------------------------------------------------------------
# uniform sampling of cyclically reduced words


def sample_uniform_word(m: int, ell: int, rng: np.random.Generator) -> Word:
    """One word uniform over all cyclically reduced words of length ell.

    Builds a uniform reduced word (first letter free, each next letter
    uniform over the 2m-1 non-cancelling choices) and rejects until the
    wrap-around constraint holds; acceptance is at least 1/2, so the
    expected number of attempts is at most 2.
    """
    if m < 1 or ell < 1:
        raise DomainError("need m >= 1 and ell >= 1")
    while True:
        codes = [int(rng.integers(0, 2 * m))]
        for _ in range(ell - 1):
            r = int(rng.integers(0, 2 * m - 1))
            forbidden = codes[-1] ^ 1
            codes.append(r if r < forbidden else r + 1)
        if ell == 1 or codes[-1] != codes[0] ^ 1:
            signed = tuple(
                (c >> 1) + 1 if c & 1 == 0 else -((c >> 1) + 1) for c in codes
            )
            return signed


def sample_uniform_words_matrix(m: int, ell: int, size: int,
                                rng: np.random.Generator) -> np.ndarray:
    """Vectorized batch of i.i.d. uniform cyclically reduced words.

    Returns a (size, ell) int32 matrix of signed letters; rows are
    independent draws (duplicates possible).
    """
    if m < 1 or ell < 1:
        raise DomainError("need m >= 1 and ell >= 1")
    if size == 0:
        return np.empty((0, ell), dtype=np.int32)
    out_blocks = []
    got = 0
    # acceptance rate = |cyclically reduced| / |reduced| >= 1/2
    while got < size:
        need = size - got
        batch = int(need * 1.1) + 16
        codes = np.empty((batch, ell), dtype=np.int64)
        codes[:, 0] = rng.integers(0, 2 * m, size=batch)
        for j in range(1, ell):
            r = rng.integers(0, 2 * m - 1, size=batch)
            forbidden = codes[:, j - 1] ^ 1
            codes[:, j] = r + (r >= forbidden)
        if ell > 1:
            keep = codes[:, -1] != (codes[:, 0] ^ 1)
            codes = codes[keep]
        out_blocks.append(_codes_to_signed(codes))
        got += codes.shape[0]
    out = np.concatenate(out_blocks, axis=0)
    return out[:size]


def _sample_positive_words_matrix(m: int, ell: int, size: int,
                                  rng: np.random.Generator) -> np.ndarray:
    return rng.integers(1, m + 1, size=(size, ell), dtype=np.int64).astype(np.int32)


# ---------------------------------------------------------------------------
# model samplers


def _draw_relator_count(n_universe: int, p: float, rng: np.random.Generator,
                        notes: list[str]) -> int:
    """Binomial(N, p) with N exact; Poisson fallback only in its safe regime."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0,1], got {p}")
    if n_universe <= _INT64_MAX:
        return int(rng.binomial(n_universe, p))
    mean = float(n_universe) * p
    if p < 1e-8 and mean < float(_INT64_MAX):
        notes.append("poisson_approximation")
        return int(rng.poisson(mean))
    raise DomainError(
        "universe exceeds 2^63 and the Poisson regime does not apply; "
        "exact binomial sampling is not available at this size"
    )


def _enumerate_universe_matrix(m: int, ell: int, positive: bool) -> np.ndarray:
    if positive:
        n = m**ell
        grid = np.indices((m,) * ell).reshape(ell, n).T + 1
        return grid.astype(np.int32)
    return np.array(list(iter_cyclically_reduced(m, ell)), dtype=np.int32)


def _sample_distinct(m: int, ell: int, k: int, positive: bool,
                     rng: np.random.Generator) -> np.ndarray:
    """Uniform k-subset of the universe, as a matrix in draw order."""
    n_universe = universe_size(m, ell, positive=positive)
    if k > n_universe:
        raise CountExceedsUniverseError(
            f"requested {k} distinct relators from a universe of {n_universe}")
    if k > MAX_RELATORS:
        raise DomainError(
            f"requested {k} relators exceeds the materialization cap {MAX_RELATORS}")
    if k == 0:
        return np.empty((0, ell), dtype=np.int32)
    if 2 * k > n_universe:
        # dense regime: rejection would thrash, enumerate and subsample
        universe = _enumerate_universe_matrix(m, ell, positive)
        idx = rng.choice(n_universe, size=k, replace=False)
        return universe[idx]
    draw = (_sample_positive_words_matrix if positive
            else sample_uniform_words_matrix)
    kept = np.empty((0, ell), dtype=np.int32)
    while kept.shape[0] < k:
        need = k - kept.shape[0]
        batch = draw(m, ell, int(need * 1.05) + 16, rng)
        kept = _unique_rows_stable(np.concatenate([kept, batch], axis=0))
    return kept[:k]


def _finish(params: ModelParams, tag: str, matrix: np.ndarray,
            notes: list[str]) -> Presentation:
    matrix = _sort_rows(matrix)
    return Presentation(params.m, params.ell, tag, params.param, params.seed,
                        matrix, tuple(notes))


def sample_binomial(params: ModelParams) -> Presentation:
    """Each cyclically reduced word of length ell is a relator with probability p."""
    m, ell, p = params.m, params.ell, params.param
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0,1], got {p}")
    rng = make_rng(params.seed)
    notes: list[str] = []
    n_universe = universe_size(m, ell)
    if n_universe <= SMALL_UNIVERSE_MAX:
        universe = _enumerate_universe_matrix(m, ell, positive=False)
        mask = rng.random(n_universe) < p
        return _finish(params, "binomial", universe[mask], notes)
    k = _draw_relator_count(n_universe, p, rng, notes)
    matrix = _sample_distinct(m, ell, k, False, rng)
    return _finish(params, "binomial", matrix, notes)


def sample_positive(params: ModelParams) -> Presentation:
    """Each of the m^ell positive words is a relator with probability p."""
    m, ell, p = params.m, params.ell, params.param
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0,1], got {p}")
    rng = make_rng(params.seed)
    notes: list[str] = []
    n_universe = universe_size(m, ell, positive=True)
    if n_universe <= SMALL_UNIVERSE_MAX:
        universe = _enumerate_universe_matrix(m, ell, positive=True)
        mask = rng.random(n_universe) < p
        return _finish(params, "positive", universe[mask], notes)
    k = _draw_relator_count(n_universe, p, rng, notes)
    matrix = _sample_distinct(m, ell, k, True, rng)
    return _finish(params, "positive", matrix, notes)


def uniform_count_size(m: int, ell: int, d: float) -> int:
    """floor((2m-1)^(ell*d)), with a tiny tolerance so exact powers stay exact."""
    if not 0.0 < d < 1.0:
        raise DomainError(f"density must lie in (0,1), got {d}")
    x = float(2 * m - 1) ** (ell * d)
    nearest = round(x)
    if abs(x - nearest) < 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return int(math.floor(x))


def sample_uniform_count(params: ModelParams) -> Presentation:
    """Exactly floor((2m-1)^(ell*d)) distinct relators, uniform over all such sets."""
    m, ell, d = params.m, params.ell, params.param
    rng = make_rng(params.seed)
    k = uniform_count_size(m, ell, d)
    matrix = _sample_distinct(m, ell, k, False, rng)
    return _finish(params, "uniform_count", matrix, [])


SAMPLERS = {
    "binomial": sample_binomial,
    "positive": sample_positive,
    "uniform_count": sample_uniform_count,
}


def sample(model_tag: str, params: ModelParams) -> Presentation:
    try:
        return SAMPLERS[model_tag](params)
    except KeyError:
        raise DomainError(f"unknown model tag {model_tag!r}") from None


# ---------------------------------------------------------------------------
# file format
#
# line 1:  m ell model_tag param seed
# then one relator per line as space-separated signed integers


def save_presentation(pres: Presentation, fh: IO[str]) -> None:
    fh.write(f"{pres.m} {pres.ell} {pres.model_tag} {pres.param!r} {pres.seed}\n")
    for row in pres.relator_matrix:
        fh.write(" ".join(str(int(x)) for x in row))
        fh.write("\n")


def load_presentation(fh: IO[str]) -> Presentation:
    header = fh.readline()
    if not header.strip():
        raise PresentationFormatError(1, "missing header line")
    parts = header.split()
    if len(parts) != 5:
        raise PresentationFormatError(
            1, f"header needs 5 fields (m ell model_tag param seed), got {len(parts)}")
    try:
        m, ell = int(parts[0]), int(parts[1])
        tag = parts[2]
        param = float(parts[3])
        seed = int(parts[4])
    except ValueError as exc:
        raise PresentationFormatError(1, f"malformed header: {exc}") from None
    if tag not in MODEL_TAGS:
        raise PresentationFormatError(1, f"unknown model tag {tag!r}")
    if m < 1 or ell < 1:
        raise PresentationFormatError(1, f"need m >= 1 and ell >= 1, got m={m} ell={ell}")
    rows = []
    for lineno, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        try:
            w = tuple(int(tok) for tok in line.split())
        except ValueError:
            raise PresentationFormatError(lineno, f"malformed relator {line.strip()!r}") from None
        if len(w) != ell:
            raise PresentationFormatError(
                lineno, f"relator length {len(w)}, expected {ell}")
        if any(x == 0 or abs(x) > m for x in w):
            raise PresentationFormatError(lineno, f"letter out of range in {w}")
        if not is_cyclically_reduced(w):
            raise PresentationFormatError(lineno, f"relator {w} is not cyclically reduced")
        if tag == "positive" and any(x < 0 for x in w):
            raise PresentationFormatError(lineno, f"negative letter in positive model: {w}")
        rows.append(w)
    matrix = (np.array(rows, dtype=np.int32) if rows
              else np.empty((0, ell), dtype=np.int32))
    matrix = _sort_rows(_unique_rows_stable(matrix))
    return Presentation(m, ell, tag, param, seed, matrix)
