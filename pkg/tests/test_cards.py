import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kwhcheck.cards import (
    Card, Permutation, PermutationError, Sequence, ShuffleSpec, apply_permutation, compose,
    generated_group, inverse, is_closed, is_uniform, parse_cycles,
)
from oracles import brute_group, brute_is_subgroup, perm_tuple


def P(text, n=4):
    return parse_cycles(text, n)


def S(text):
    return Sequence.from_string(text)


def perms_of(n):
    return st.permutations(range(1, n + 1)).map(lambda m: Permutation(tuple(m)))


class TestParse:
    def test_identity(self):
        assert P("id").mapping == (1, 2, 3, 4)

    def test_double_transposition(self):
        assert P("(1 3)(2 4)").mapping == (3, 4, 1, 2)

    def test_starred_five_card_shuffle(self):
        assert P("(1 2)(3 5 4)", 5).mapping == (2, 1, 5, 3, 4)

    @pytest.mark.parametrize("text", ["(1 2)(2 3)", "(1 5)", "(1)", "1 2", "(1 2) x", "", "(a b)"])
    def test_rejects(self, text):
        with pytest.raises(PermutationError):
            P(text)

    @pytest.mark.parametrize("text", ["id", "(1 2)", "(1 3)(2 4)", "(1 2 3 4)", "(2 4 3)"])
    def test_str_round_trip(self, text):
        assert str(P(text)) == text
        assert P(str(P(text))) == P(text)

    def test_cycles_start_at_smallest(self):
        assert str(P("(3 1 2)")) == "(1 2 3)"

    def test_bijection_required(self):
        with pytest.raises(PermutationError):
            Permutation((1, 1, 3))


class TestApply:
    def test_figure_one_perm_edge(self):
        assert apply_permutation(S("CHHC"), P("(2 3 4)")).face_string() == "CCHH"

    def test_figure_two_starred_shuffle_row(self):
        assert apply_permutation(S("HCCHH"), P("(1 2)(3 5 4)", 5)).face_string() == "CHHHC"

    def test_identity(self):
        s = Sequence.from_string("CHCH", (True, False, False, True))
        assert apply_permutation(s, P("id")) == s

    def test_destination_convention(self):
        # result[sigma(i)] = seq[i]: the card at 1 moves to 2
        assert apply_permutation(S("HCCC"), P("(1 2 3 4)")).face_string() == "CHCC"

    def test_perm_box_b6_to_c2(self):
        src = {"CHHC", "HCHC", "HHCC"}
        assert {apply_permutation(S(s), P("(2 3 4)")).face_string() for s in src} == {"CCHH", "HCCH", "HCHC"}

    def test_size_mismatch(self):
        with pytest.raises(PermutationError):
            apply_permutation(S("CHC"), P("id"))

    @given(perms_of(5), st.lists(st.sampled_from("CH"), min_size=5, max_size=5),
           st.lists(st.booleans(), min_size=5, max_size=5))
    def test_round_trip_and_multisets(self, p, faces, up):
        s = Sequence.from_string("".join(faces), up)
        t = apply_permutation(s, p)
        assert apply_permutation(t, inverse(p)) == s
        assert sorted(t.faces) == sorted(s.faces)
        assert sorted(t.up) == sorted(s.up)


class TestCompose:
    def test_square_of_four_cycle(self):
        assert compose(P("(1 2 3 4)"), P("(1 2 3 4)")) == P("(1 3)(2 4)")

    def test_disjoint_transpositions_by_brute_force(self):
        pq = compose(P("(1 3)"), P("(2 4)"))
        assert pq == P("(1 3)(2 4)")
        for faces in itertools.permutations("ABCD"):
            seq = list(faces)
            once = [None] * 4
            for i in range(4):
                once[P("(1 3)")(i + 1) - 1] = seq[i]
            twice = [None] * 4
            for i in range(4):
                twice[P("(2 4)")(i + 1) - 1] = once[i]
            direct = [None] * 4
            for i in range(4):
                direct[pq(i + 1) - 1] = seq[i]
            assert twice == direct

    def test_then_alias(self):
        assert P("(1 2)").then(P("(2 3)")) == compose(P("(1 2)"), P("(2 3)"))

    @given(perms_of(5))
    def test_inverse(self, p):
        assert compose(p, inverse(p)).is_identity()
        assert compose(inverse(p), p).is_identity()

    @given(perms_of(5), perms_of(5), perms_of(5))
    def test_associative_with_neutral_identity(self, p, q, r):
        assert compose(compose(p, q), r) == compose(p, compose(q, r))
        e = Permutation.identity(5)
        assert compose(p, e) == p == compose(e, p)


class TestShuffleSpec:
    def test_uniform_pair(self):
        assert is_uniform(ShuffleSpec([(P("id"), Fraction(1, 2)), (P("(2 3)"), Fraction(1, 2))]))

    def test_unequal_weights(self):
        spec = ShuffleSpec([(P("id"), Fraction(1, 2)), (P("(1 2)"), Fraction(1, 4)),
                            (P("(3 4)"), Fraction(1, 4))])
        assert not is_uniform(spec)

    def test_uniform_starred(self):
        assert is_uniform(ShuffleSpec.uniform([P("id"), P("(1 3)"), P("(1 2 3 4)")]))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="weights must sum to 1"):
            ShuffleSpec([(P("id"), Fraction(1, 2)), (P("(1 2)"), Fraction(2, 5))])

    @pytest.mark.parametrize("entries", [
        [],
        [(parse_cycles("id", 4), Fraction(1, 2)), (parse_cycles("id", 4), Fraction(1, 2))],
        [(parse_cycles("id", 4), Fraction(1, 2)), (parse_cycles("id", 3), Fraction(1, 2))],
        [(parse_cycles("id", 4), Fraction(3, 2)), (parse_cycles("(1 2)", 4), Fraction(-1, 2))],
    ])
    def test_invalid(self, entries):
        with pytest.raises(ValueError):
            ShuffleSpec(entries)

    def test_equality_ignores_order_but_label_keeps_it(self):
        a = ShuffleSpec.uniform([P("id"), P("(1 3)")])
        b = ShuffleSpec.uniform([P("(1 3)"), P("id")])
        assert a == b and hash(a) == hash(b)
        assert b.label() == "{(1 3),id}"


CLOSURE_CASES = [
    (["id", "(1 3)(2 4)"], 4, True),
    (["id", "(1 3)", "(1 2 3 4)"], 4, False),
    (["id", "(1 3)", "(1 2)(3 5 4)"], 5, False),
    (["id", "(1 2 3 4 5)", "(1 3 5 2 4)", "(1 4 2 5 3)", "(1 5 4 3 2)"], 5, True),
]


class TestGroups:
    @pytest.mark.parametrize("texts,n,closed", CLOSURE_CASES)
    def test_closure_against_oracle(self, texts, n, closed):
        perms = [parse_cycles(t, n) for t in texts]
        assert is_closed(perms) is closed
        assert brute_is_subgroup(perms) is closed

    def test_trivial_group(self):
        assert generated_group([P("id")]) == [P("id")]

    def test_cyclic_four(self):
        g = generated_group([P("(1 2 3 4)")])
        assert len(g) == 4
        assert {perm_tuple(p) for p in g} == brute_group([P("(1 2 3 4)")])

    def test_dihedral_eight(self):
        gens = [P("id"), P("(1 3)"), P("(1 2 3 4)")]
        g = generated_group(gens)
        assert len(g) == 8
        assert {perm_tuple(p) for p in g} == brute_group(gens)

    def test_sorted_output(self):
        g = generated_group([P("(1 2 3 4)")])
        assert g == sorted(g)

    @given(st.sets(perms_of(4), min_size=1, max_size=6))
    def test_closed_iff_group_size_matches(self, perms):
        assert is_closed(perms) == (len(generated_group(perms)) == len(perms))
        assert is_closed(perms) == brute_is_subgroup(perms)
        assert {perm_tuple(p) for p in generated_group(perms)} == brute_group(perms)


def test_card_letters_and_order():
    assert Card.CLUB < Card.HEART
    assert Card.from_letter("H") is Card.HEART
    assert Card.CLUB.letter == "C" and Card.HEART.glyph == "♥"
    with pytest.raises(ValueError):
        Card.from_letter("X")


def test_sequence_rendering():
    s = Sequence.from_string("CHCH", (False, True, False, False))
    assert s.visible() == "?H??"
    assert str(s) == "ChCH"
    assert s.face_down().visible() == "????"
