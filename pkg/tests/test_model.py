from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from randgroup.errors import (
    CountExceedsUniverseError,
    DomainError,
    PresentationFormatError,
)
from randgroup.model import (
    ModelParams,
    euler_characteristic,
    density_to_p,
    load_presentation,
    make_presentation,
    make_rng,
    p_to_density,
    sample_binomial,
    sample_positive,
    sample_uniform_count,
    sample_uniform_word,
    sample_uniform_words_matrix,
    save_presentation,
    uniform_count_size,
    universe_size,
    _sample_distinct,
)
from randgroup.words import (
    enumerate_cyclically_reduced,
    is_cyclically_reduced,
    word_key,
)


def test_universe_sizes():
    assert universe_size(2, 3) == 28
    assert universe_size(2, 3, positive=True) == 8
    assert universe_size(10, 3) == 19**3 + 10 - 9  # odd length: +m-(m-1)


def test_binomial_p0_empty():
    pres = sample_binomial(ModelParams(2, 3, 0.0, 7))
    assert len(pres) == 0
    assert euler_characteristic(pres) == -1


def test_binomial_p1_full_universe():
    pres = sample_binomial(ModelParams(2, 3, 1.0, 7))
    assert len(pres) == 28
    assert set(pres.relators) == set(enumerate_cyclically_reduced(2, 3))
    assert euler_characteristic(pres) == 27


def test_positive_p1_full_universe():
    pres = sample_positive(ModelParams(2, 3, 1.0, 7))
    assert len(pres) == 8
    assert pres.all_positive
    assert set(pres.relators) == {
        (1, 1, 1), (1, 1, 2), (1, 2, 1), (1, 2, 2),
        (2, 1, 1), (2, 1, 2), (2, 2, 1), (2, 2, 2),
    }


def test_uniform_count_exact_size():
    # (2*10-1)^(3 * 1/3) = 19 exactly
    assert uniform_count_size(10, 3, 1 / 3) == 19
    pres = sample_uniform_count(ModelParams(10, 3, 1 / 3, 5))
    assert len(pres) == 19
    assert len(set(pres.relators)) == 19


def test_density_maps():
    assert density_to_p(10, 3, 1 / 3) == pytest.approx(1e-2)
    d = p_to_density(10, 3, 1e-2)
    assert d == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        density_to_p(10, 3, 1.5)
    with pytest.raises(DomainError):
        p_to_density(10, 3, 0.0)


def test_determinism_same_seed():
    a = sample_binomial(ModelParams(3, 4, 0.01, 123))
    b = sample_binomial(ModelParams(3, 4, 0.01, 123))
    assert a == b
    c = sample_binomial(ModelParams(3, 4, 0.01, 124))
    # different seed virtually never gives the same draw here
    assert a != c or len(a) == 0


def test_relators_sorted_and_valid():
    pres = sample_binomial(ModelParams(3, 4, 0.05, 9))
    rel = pres.relators
    assert list(rel) == sorted(rel, key=word_key)
    assert len(set(rel)) == len(rel)
    for w in rel:
        assert len(w) == 4
        assert is_cyclically_reduced(w)
        assert all(1 <= abs(x) <= 3 for x in w)


def test_large_universe_rejection_path():
    # universe 15630 > small-universe threshold, exercises distinct sampling
    pres = sample_binomial(ModelParams(3, 6, 0.01, 77))
    assert len(set(pres.relators)) == len(pres)
    for w in pres.relators:
        assert is_cyclically_reduced(w)
    again = sample_binomial(ModelParams(3, 6, 0.01, 77))
    assert pres == again


def test_binomial_marginal_frequency():
    # each fixed word is a relator with probability exactly p
    p, trials = 0.1, 10_000
    target = (1, 2, 1)
    hits = 0
    for seed in range(trials):
        pres = sample_binomial(ModelParams(2, 3, p, seed))
        if target in set(pres.relators):
            hits += 1
    freq = hits / trials
    sigma = (p * (1 - p) / trials) ** 0.5
    assert abs(freq - p) < 4 * sigma


def test_big_path_marginal_frequency():
    # same marginal law on the rejection-sampling path
    p, trials = 0.05, 1500
    target = (1, 1, 1, 1, 1, 1)
    hits = 0
    for seed in range(trials):
        pres = sample_binomial(ModelParams(3, 6, p, seed))
        if target in set(pres.relators):
            hits += 1
    freq = hits / trials
    sigma = (p * (1 - p) / trials) ** 0.5
    assert abs(freq - p) < 5 * sigma


def test_uniform_word_single_draws():
    rng = make_rng(3)
    for _ in range(50):
        w = sample_uniform_word(2, 3, rng)
        assert is_cyclically_reduced(w)
    # m=1, ell=2: only two cyclically reduced words exist
    seen = {sample_uniform_word(1, 2, rng) for _ in range(200)}
    assert seen == {(1, 1), (-1, -1)}


def test_uniform_words_matrix_uniformity():
    # chi-square over the 28-word universe
    rng = make_rng(11)
    mat = sample_uniform_words_matrix(2, 3, 100_000, rng)
    words = [tuple(int(x) for x in row) for row in mat]
    universe = enumerate_cyclically_reduced(2, 3)
    assert set(words) <= set(universe)
    counts = [0] * len(universe)
    index = {w: i for i, w in enumerate(universe)}
    for w in words:
        counts[index[w]] += 1
    res = stats.chisquare(counts)
    assert res.pvalue > 1e-3


def test_sample_distinct_errors():
    rng = make_rng(1)
    with pytest.raises(CountExceedsUniverseError):
        _sample_distinct(2, 3, 29, False, rng)


def test_file_round_trip():
    pres = sample_binomial(ModelParams(3, 4, 0.02, 55))
    buf = io.StringIO()
    save_presentation(pres, buf)
    buf.seek(0)
    back = load_presentation(buf)
    assert back == pres
    assert back.model_tag == "binomial"
    assert back.param == pres.param
    assert back.seed == 55


def test_file_errors_carry_line_numbers():
    bad = io.StringIO("2 3 binomial 0.5\n")  # four header fields
    with pytest.raises(PresentationFormatError) as err:
        load_presentation(bad)
    assert err.value.lineno == 1

    bad = io.StringIO("2 3 binomial 0.5 7\n1 2\n")  # wrong length
    with pytest.raises(PresentationFormatError) as err:
        load_presentation(bad)
    assert err.value.lineno == 2

    bad = io.StringIO("2 3 binomial 0.5 7\n1 -1 2\n")  # not cyclically reduced
    with pytest.raises(PresentationFormatError) as err:
        load_presentation(bad)
    assert err.value.lineno == 2

    bad = io.StringIO("2 3 positive 0.5 7\n1 -2 1\n")
    with pytest.raises(PresentationFormatError):
        load_presentation(bad)


def test_make_presentation_validation():
    with pytest.raises(Exception):
        make_presentation(2, 3, [(1, -1, 2)])  # not cyclically reduced
    with pytest.raises(Exception):
        make_presentation(2, 3, [(1, 2)])  # wrong length
    pres = make_presentation(2, 3, [(2, 1, 1), (1, 1, 2), (2, 1, 1)])
    assert len(pres) == 2  # duplicates collapse
    assert pres.relators == ((1, 1, 2), (2, 1, 1))  # sorted


@settings(max_examples=40, deadline=None)
@given(
    m=st.integers(min_value=1, max_value=4),
    ell=st.integers(min_value=1, max_value=5),
    p=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**32),
)
def test_sampled_presentations_valid(m, ell, p, seed):
    pres = sample_binomial(ModelParams(m, ell, p, seed))
    assert len(set(pres.relators)) == len(pres)
    for w in pres.relators:
        assert len(w) == ell
        assert is_cyclically_reduced(w)
    assert euler_characteristic(pres) == 1 - m + len(pres)


@settings(max_examples=30, deadline=None)
@given(
    m=st.integers(min_value=1, max_value=4),
    ell=st.integers(min_value=1, max_value=4),
    p=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**32),
)
def test_positive_presentations_positive(m, ell, p, seed):
    pres = sample_positive(ModelParams(m, ell, p, seed))
    assert pres.all_positive
    assert len(pres) <= m**ell
