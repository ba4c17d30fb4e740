from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randgroup.abelianization import surjects_onto_Z
from randgroup.errors import BudgetExceededError, DomainError
from randgroup.fa_certificates import (
    FAReport,
    LWitness,
    SLWitness,
    VERDICT_FA,
    VERDICT_FREE,
    VERDICT_SPLITS,
    VERDICT_UNKNOWN,
    check_L_exact,
    check_SL_exact,
    fa_verdict,
    unused_generators,
    verify_L_witness,
    verify_SL_witness,
)
from randgroup.freeness import EliminationCertificate, certify_free
from randgroup.model import ModelParams, make_presentation, sample_positive

EPS = Fraction(1, 100)


def all_positive_words(m, ell):
    return [w for w in product(range(1, m + 1), repeat=ell)]


def set_size(eps, m):
    return max(1, -((-eps.numerator * m) // eps.denominator))


def partition_cap(eps, m):
    e = 1 - eps
    return max(1, (e.numerator * m) // e.denominator)


# --------------------------------------------------------------- oracles

def naive_check_L(pres, eps):
    # literal scan of every tuple of size-s sets
    m, ell, s = pres.m, pres.ell, set_size(eps, pres.m)
    rels = pres.relators
    for sets in product(combinations(range(1, m + 1), s), repeat=ell):
        hit = any(all(r[i] in sets[i] for i in range(ell)) for r in rels)
        if not hit:
            return sets
    return "holds"


def naive_check_SL(pres, eps):
    m, cap = pres.m, partition_cap(eps, pres.m)
    rels = pres.relators
    for size in range(1, cap + 1):
        for u in combinations(range(1, m + 1), size):
            us = set(u)
            ok = any(r[0] in us and all(x not in us for x in r[1:])
                     for r in rels)
            if not ok:
                return u
    return "holds"


# ------------------------------------------------------ letter condition

def test_L_all_words_holds():
    pres = make_presentation(2, 3, all_positive_words(2, 3))
    assert check_L_exact(pres, EPS) == "holds"


def test_L_missing_word_gives_its_witness():
    words = [w for w in all_positive_words(2, 3) if w != (1, 2, 2)]
    pres = make_presentation(2, 3, words)
    got = check_L_exact(pres, EPS)
    assert got == LWitness(sets=((1,), (2,), (2,)))
    assert verify_L_witness(pres, got, EPS)


def test_L_empty_presentation():
    pres = make_presentation(3, 3, [])
    got = check_L_exact(pres, EPS)
    assert got == LWitness(sets=((1,), (1,), (1,)))
    assert verify_L_witness(pres, got, EPS)


def test_L_signed_needs_support_mode():
    pres = make_presentation(2, 3, [(1, -2, 1)])
    with pytest.raises(DomainError):
        check_L_exact(pres, EPS, mode="positive_letters")
    got = check_L_exact(pres, EPS, mode="support")
    assert isinstance(got, LWitness)
    assert verify_L_witness(pres, got, EPS, mode="support")


def test_L_budget():
    pres = make_presentation(6, 3, all_positive_words(6, 3))
    with pytest.raises(BudgetExceededError):
        check_L_exact(pres, Fraction(1, 3), budget=3)


def test_L_bad_epsilon():
    pres = make_presentation(2, 3, [])
    for bad in (0, 1, Fraction(5, 4), -1):
        with pytest.raises(DomainError):
            check_L_exact(pres, bad)


# ------------------------------------------------------- split condition

def test_SL_pair_holds():
    pres = make_presentation(2, 3, [(1, 2, 2), (2, 1, 1)])
    assert check_SL_exact(pres, EPS) == "holds"


def test_SL_missing_direction():
    pres = make_presentation(2, 3, [(1, 2, 2)])
    got = check_SL_exact(pres, EPS)
    assert got == SLWitness(U=(2,), V=(1,))
    assert verify_SL_witness(pres, got, EPS)


def test_SL_empty_presentation():
    got = check_SL_exact(make_presentation(3, 3, []), EPS)
    assert got == SLWitness(U=(1,), V=(2, 3))
    assert verify_SL_witness(make_presentation(3, 3, []), got, EPS)


def test_SL_budget():
    pres = make_presentation(23, 3, [tuple([g] * 3) for g in range(1, 24)])
    with pytest.raises(BudgetExceededError):
        check_SL_exact(pres, EPS)


def test_SL_signed_rejected():
    pres = make_presentation(2, 3, [(1, -2, 1)])
    with pytest.raises(DomainError):
        check_SL_exact(pres, EPS)


# --------------------------------------------------- dual-route scanning

@st.composite
def positive_presentations(draw):
    m = draw(st.integers(min_value=1, max_value=4))
    ell = draw(st.integers(min_value=1, max_value=3))
    pool = all_positive_words(m, ell)
    k = draw(st.integers(min_value=0, max_value=min(len(pool), 8)))
    idxs = draw(st.lists(st.integers(0, len(pool) - 1),
                         min_size=k, max_size=k, unique=True))
    return make_presentation(m, ell, [pool[i] for i in idxs])


@settings(max_examples=200, deadline=None)
@given(positive_presentations(),
       st.sampled_from([Fraction(1, 100), Fraction(1, 3), Fraction(1, 2)]))
def test_L_matches_naive(pres, eps):
    got = check_L_exact(pres, eps)
    want = naive_check_L(pres, eps)
    if want == "holds":
        assert got == "holds"
    else:
        assert isinstance(got, LWitness)
        assert verify_L_witness(pres, got, eps)


@settings(max_examples=200, deadline=None)
@given(positive_presentations(),
       st.sampled_from([Fraction(1, 100), Fraction(1, 3), Fraction(1, 2)]))
def test_SL_matches_naive(pres, eps):
    got = check_SL_exact(pres, eps)
    want = naive_check_SL(pres, eps)
    if want == "holds":
        assert got == "holds"
    else:
        assert isinstance(got, SLWitness)
        assert verify_SL_witness(pres, got, eps)


@settings(max_examples=120, deadline=None)
@given(positive_presentations(), st.data())
def test_monotone_under_more_relators(pres, data):
    pool = all_positive_words(pres.m, pres.ell)
    extra_n = data.draw(st.integers(0, min(4, len(pool))))
    extra = data.draw(st.lists(st.integers(0, len(pool) - 1),
                               min_size=extra_n, max_size=extra_n,
                               unique=True))
    bigger = make_presentation(
        pres.m, pres.ell,
        list(pres.relators) + [pool[i] for i in extra])
    if check_L_exact(pres, EPS) == "holds":
        assert check_L_exact(bigger, EPS) == "holds"
    if check_SL_exact(pres, EPS) == "holds":
        assert check_SL_exact(bigger, EPS) == "holds"


# ------------------------------------------------------------- verdicts

def test_verdict_free():
    rep = fa_verdict(make_presentation(3, 3, [(1, 2, 3)]))
    assert rep.verdict == VERDICT_FREE
    assert rep.rank == 2
    assert isinstance(rep.free_certificate, EliminationCertificate)


def test_verdict_free_beats_splitting():
    # one eliminable generator plus two unused ones: freeness wins
    rep = fa_verdict(make_presentation(4, 3, [(1, 2, 1)]))
    assert rep.verdict == VERDICT_FREE
    assert rep.rank == 3


def test_verdict_splits():
    rep = fa_verdict(make_presentation(4, 3, [(1, 1, 1)]))
    assert rep.verdict == VERDICT_SPLITS
    assert rep.unused_generators == (2, 3, 4)
    assert unused_generators(make_presentation(4, 3, [(1, 1, 1)])) == (2, 3, 4)


def test_verdict_fa_on_full_cube():
    pres = make_presentation(2, 3, all_positive_words(2, 3))
    rep = fa_verdict(pres)
    assert rep.verdict == VERDICT_FA
    assert rep.l_holds and rep.sl_holds
    assert not surjects_onto_Z(pres)


def test_verdict_unknown_with_budget_flag():
    pres = make_presentation(23, 3, [tuple([g] * 3) for g in range(1, 24)])
    rep = fa_verdict(pres)
    assert rep.verdict == VERDICT_UNKNOWN
    assert rep.budget_exceeded


def test_verdict_unknown_for_signed_non_free():
    pres = make_presentation(2, 4, [(1, 1, -2, -2), (2, 2, -1, -1),
                                    (1, 2, 1, 2), (2, 1, 2, 1)])
    rep = fa_verdict(pres)
    assert rep.verdict == VERDICT_UNKNOWN
    assert rep.l_holds is None and rep.sl_holds is None


def test_exploratory_epsilon_flag():
    pres = make_presentation(2, 3, all_positive_words(2, 3))
    assert not fa_verdict(pres).exploratory_epsilon
    assert fa_verdict(pres, eps=Fraction(1, 3)).exploratory_epsilon


def test_witness_json_round_trips():
    lw = LWitness(sets=((1, 3), (2, 4)))
    assert LWitness.from_json_dict(lw.to_json_dict()) == lw
    sw = SLWitness(U=(2,), V=(1, 3))
    assert SLWitness.from_json_dict(sw.to_json_dict()) == sw
    rep = fa_verdict(make_presentation(3, 3, [(1, 2, 3)]))
    d = rep.to_json_dict()
    assert d["verdict"] == VERDICT_FREE
    assert d["epsilon"] == "1/100"


# ----------------------------------------- soundness across the p range

def test_soundness_over_random_presentations():
    # free-with-positive-rank and the two-condition certificate must
    # never coexist, and the certificate must kill every map onto Z
    n_seen = 0
    n_fa = 0
    for m, ell in ((2, 3), (3, 3), (2, 4)):
        for p in (0.02, 0.1, 0.3, 0.6, 0.9, 1.0):
            for seed in range(60):
                pres = sample_positive(
                    ModelParams(m=m, ell=ell, param=p, seed=seed))
                rep = fa_verdict(pres)
                cert = certify_free(pres)
                n_seen += 1
                free_positive = (isinstance(cert, EliminationCertificate)
                                 and cert.final_rank >= 1)
                assert not (free_positive and rep.verdict == VERDICT_FA)
                if rep.verdict == VERDICT_FA:
                    n_fa += 1
                    assert not surjects_onto_Z(pres)
    assert n_seen >= 1000
    assert n_fa >= 1  # the scan must actually exercise the certificate
