"""Words over a symmetric generating alphabet.

A word is a tuple of nonzero signed integers: ``g`` stands for the g-th
generator and ``-g`` for its inverse. The letter order used everywhere is
by generator index first, with the positive letter before its inverse:
``1 < -1 < 2 < -2 < ...``. Words of equal length compare lexicographically
under that letter order.

A word is reduced when no two adjacent letters cancel, and cyclically
reduced when additionally the last letter does not cancel the first.
"""

from __future__ import annotations

from typing import Iterator

from .errors import CapExceededError, EmptyWordError, NotCyclicallyReducedError

Word = tuple[int, ...]

DEFAULT_ENUMERATION_CAP = 10**7


def letter_key(letter: int) -> tuple[int, int]:
    """Sort key realizing the letter order 1 < -1 < 2 < -2 < ..."""
    return (abs(letter), 0 if letter > 0 else 1)


def word_key(word: Word) -> tuple[tuple[int, int], ...]:
    """Lexicographic sort key for a word."""
    return tuple(letter_key(x) for x in word)


def validate_word(word: Word, m: int | None = None) -> None:
    """Raise on letters that are zero, non-integral, or out of range."""
    if len(word) == 0:
        raise EmptyWordError("empty word")
    for x in word:
        if not isinstance(x, int) or isinstance(x, bool) or x == 0:
            raise ValueError(f"invalid letter {x!r}")
        if m is not None and abs(x) > m:
            raise ValueError(f"letter {x} outside generator range 1..{m}")


def inverse_word(word: Word) -> Word:
    """The formal inverse: reversed word with every letter negated."""
    return tuple(-x for x in reversed(word))


def is_reduced(word: Word) -> bool:
    """True when no adjacent pair of letters cancels."""
    if len(word) == 0:
        raise EmptyWordError("empty word")
    return all(word[i] != -word[i + 1] for i in range(len(word) - 1))


def is_cyclically_reduced(word: Word) -> bool:
    """True when the word is reduced and the last letter does not cancel the first.

    A single letter is always cyclically reduced.
    """
    return is_reduced(word) and word[-1] != -word[0]


def count_cyclically_reduced(m: int, ell: int) -> int:
    """Exact number of cyclically reduced words of length ell over m generators.

    Closed form (2m-1)^ell + m + (m-1)(-1)^ell, exact for every m >= 1,
    ell >= 1; validated against brute-force enumeration in the test suite.
    """
    if m < 1 or ell < 1:
        raise ValueError("need m >= 1 and ell >= 1")
    return (2 * m - 1) ** ell + m + (m - 1) * (-1) ** ell


def _letters_in_order(m: int) -> list[int]:
    return [s * g for g in range(1, m + 1) for s in (1, -1)]


def iter_cyclically_reduced(m: int, ell: int) -> Iterator[Word]:
    """Yield all cyclically reduced words of length ell in lexicographic order."""
    if m < 1 or ell < 1:
        raise ValueError("need m >= 1 and ell >= 1")
    letters = _letters_in_order(m)
    word: list[int] = [0] * ell

    def rec(pos: int) -> Iterator[Word]:
        for x in letters:
            if pos > 0 and x == -word[pos - 1]:
                continue
            # at the last position also honor the wrap-around constraint;
            # for ell == 1 the letter is its own neighbor and never cancels
            if pos == ell - 1 and pos > 0 and x == -word[0]:
                continue
            word[pos] = x
            if pos == ell - 1:
                yield tuple(word)
            else:
                yield from rec(pos + 1)

    return rec(0)


def enumerate_cyclically_reduced(
    m: int, ell: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[Word]:
    """All cyclically reduced words of length ell, lexicographically ordered.

    Raises CapExceededError up front when the exact count exceeds ``cap``,
    so no partial enumeration is ever returned.
    """
    total = count_cyclically_reduced(m, ell)
    if total > cap:
        raise CapExceededError(
            f"enumeration of {total} words exceeds cap {cap} (m={m}, ell={ell})"
        )
    out = list(iter_cyclically_reduced(m, ell))
    assert len(out) == total
    return out


def rotations(word: Word) -> list[Word]:
    return [word[i:] + word[:i] for i in range(len(word))]


def canonical_class(word: Word) -> Word:
    """Lexicographically least word among all rotations of the word and of its inverse.

    This is a canonical representative of the relator's equivalence class
    (the group relation is unchanged by cyclic rotation and by inversion).
    Requires a cyclically reduced input; rotations then stay cyclically
    reduced, so the minimum is well defined within the class.
    """
    if len(word) == 0:
        raise EmptyWordError("empty word")
    if not is_cyclically_reduced(word):
        raise NotCyclicallyReducedError(f"word {word} is not cyclically reduced")
    candidates = rotations(word) + rotations(inverse_word(word))
    return min(candidates, key=word_key)


def word_to_text(word: Word) -> str:
    """Space-separated signed integers, the on-disk relator format."""
    return " ".join(str(x) for x in word)


def word_from_text(text: str) -> Word:
    """Parse the space-separated signed integer form; validates letters."""
    parts = text.split()
    if not parts:
        raise EmptyWordError("empty word text")
    try:
        word = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f"malformed word text {text!r}") from exc
    validate_word(word)
    return word


def word_to_names(word: Word) -> str:
    """Readable rendering for small m: letters a, b, c... with ^-1 for inverses."""
    pieces = []
    for x in word:
        g = abs(x) - 1
        name = chr(ord("a") + g) if g < 26 else f"s{g + 1}"
        pieces.append(name if x > 0 else name + "^-1")
    return " ".join(pieces)
