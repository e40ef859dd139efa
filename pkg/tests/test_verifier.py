from fractions import Fraction as F

import pytest
import sympy

from kwhcheck.corpus import get_entry
from kwhcheck.dsl import parse_protocol
from kwhcheck.engine import Box, KwhTree, Leaf, Node, build_kwh_tree
from kwhcheck.symbolic import parse_poly
from kwhcheck.verifier import (
    Metric, TerminationClass, analyze_shuffles, check_correctness, check_restart_free,
    check_security, check_termination, expected_runtime, full_report, report_from_source,
)
from oracles import ConcreteChain, five_card_trick_views, hearts_adjacent

INPUT_PAIRS = [(0, 0), (0, 1), (1, 0), (1, 1)]
HEADER = "protocol t\ndeck C H C H\ninputs a@(1,2) b@(3,4)\n"


def leaf_tree(ast, rows, x, y):
    box = Box.from_strings({k: parse_poly(v) for k, v in rows.items()})
    return KwhTree(ast, nodes=[Node(0, box, 0)], leaves=[Leaf(0, "result", f"(result,{x},{y})", x, y)])


class TestSecurity:
    def test_committed_protocols_pass(self, four_report, five_report):
        assert check_security(four_report.tree).ok
        assert check_security(five_report.tree).ok

    def test_trick_passes_open_output(self, trick):
        assert check_security(build_kwh_tree(trick)).ok

    def test_leak_witness(self, leaky):
        v = check_security(build_kwh_tree(leaky))
        assert not v.ok and "C???" in v.witness and "X00 + X01" in v.witness

    def test_trick_views_against_enumeration(self, trick):
        oracle = five_card_trick_views(trick)
        assert len(oracle) == 10
        leaves = {leaf.pattern: leaf for leaf in build_kwh_tree(trick).leaves}
        assert set(leaves) == set(oracle)
        for seq, probs in oracle.items():
            if hearts_adjacent(seq):
                assert probs == {(1, 1): F(1, 5)}
                assert leaves[seq].poly == parse_poly("1/5 X1") and leaves[seq].bit == 1
            else:
                assert probs == {(0, 0): F(1, 5), (0, 1): F(1, 5), (1, 0): F(1, 5)}
                assert leaves[seq].poly == parse_poly("1/5 X0") and leaves[seq].bit == 0

    def test_open_output_leak_detected(self):
        src = ("protocol t\ndeck C H C H\ninputs a@(1,2) b@(3,4)\nmode open-output\n"
               'output { "HCHC" -> 1 ; else -> 0 }')
        v = check_security(build_kwh_tree(parse_protocol(src)))
        assert not v.ok and "not a multiple" in v.witness

    @pytest.mark.parametrize("name", ["four_card_and", "five_card_and"])
    def test_reveal_counts_input_independent(self, name):
        """Expected number of times each pattern is seen at each turn, per input."""
        ast = get_entry(name).ast()
        chains = [ConcreteChain(ast, a, b) for a, b in INPUT_PAIRS]
        events = set().union(*(c.event_kinds() for c in chains))
        for ev in events:
            values = {c.expected_event(ev) for c in chains}
            assert len(values) == 1, ev

    def test_five_card_transcripts_input_independent(self, five):
        dists = [ConcreteChain(five, a, b).transcript_distribution() for a, b in INPUT_PAIRS]
        assert all(d == dists[0] for d in dists)
        assert sum(dists[0].values()) == 1
        # each path's probability is the product of the tree's branch probabilities
        tree = build_kwh_tree(five)
        products = _path_products(tree)
        assert sorted(products) == sorted(dists[0].values())


def _path_products(tree):
    out = {e.src: [] for e in tree.edges}
    for e in tree.edges:
        out[e.src].append(e)
    leaves = {leaf.node for leaf in tree.leaves}
    results = []

    def walk(node, prob):
        if node in leaves:
            results.append(prob)
            return
        for e in out[node]:
            walk(e.dst, prob * e.prob)

    walk(tree.root, F(1))
    return results


class TestCorrectness:
    def test_figure_one_leaf_b4(self, four):
        assert check_correctness(leaf_tree(four, {"CHCH": "X0", "CCHH": "X1"}, 3, 2)).ok

    def test_figure_two_leaf_c4(self, five):
        rows = {"CCHHH": "3/4 X0", "CHHHC": "1/4 X0", "HCHCH": "X1"}
        assert check_correctness(leaf_tree(five, rows, 1, 4)).ok
        v = check_correctness(leaf_tree(five, rows, 4, 1))
        assert not v.ok and "CCHHH" in v.witness

    def test_corpus(self, four_report, five_report, trick):
        assert four_report.correct.ok and five_report.correct.ok
        assert check_correctness(build_kwh_tree(trick)).ok

    def test_nonuniform_toy_is_wrong(self, nonuniform):
        assert not check_correctness(build_kwh_tree(nonuniform)).ok

    @pytest.mark.parametrize("name", ["four_card_and", "five_card_and", "five_card_trick"])
    def test_outputs_against_concrete_chain(self, name):
        ast = get_entry(name).ast()
        for a, b in INPUT_PAIRS:
            assert ConcreteChain(ast, a, b).output_distribution() == {a & b: 1}


class TestTermination:
    def test_five_card_finite(self, five_report):
        assert five_report.termination.kind is TerminationClass.FINITE

    def test_four_card_las_vegas(self, four_report):
        t = four_report.termination
        assert t.kind is TerminationClass.LAS_VEGAS and len(t.cycles) == 2
        assert all("goto" in c for c in t.cycles)

    def test_straight_line(self):
        ast = parse_protocol(HEADER + "shuffle uniform { id ; (1 3)(2 4) }\nresult 1 2")
        assert check_termination(build_kwh_tree(ast)).kind is TerminationClass.FINITE

    def test_endless_loop(self):
        ast = parse_protocol(HEADER + "loop:\n  shuffle uniform { id ; (1 3)(2 4) }\n  goto loop")
        t = check_termination(build_kwh_tree(ast))
        assert t.kind is TerminationClass.NON_CONVERGENT and t.cycles

    def test_budget_exhaustion(self, four):
        t = check_termination(build_kwh_tree(four, budget=3))
        assert t.kind is TerminationClass.NON_CONVERGENT and "budget" in t.reason


class TestExpectedRuntime:
    def test_branch_passes_is_three(self, four_report):
        value = expected_runtime(four_report.tree, Metric.BRANCH_PASSES)
        assert value == F(3, 1) and isinstance(value, F)

    def test_matches_series(self, four_report):
        k = sympy.symbols("k", integer=True, positive=True)
        third = sympy.Rational(1, 3)
        series = sympy.summation(third * k * (1 - third) ** (k - 1), (k, 1, sympy.oo))
        assert expected_runtime(four_report.tree, "branch_passes") == F(str(series))

    @pytest.mark.parametrize("name", ["four_card_and", "five_card_and", "five_card_trick"])
    def test_all_metrics_against_concrete_chain(self, name):
        ast = get_entry(name).ast()
        tree = build_kwh_tree(ast)
        for a, b in INPUT_PAIRS:
            chain = ConcreteChain(ast, a, b)
            assert expected_runtime(tree, Metric.TURN_ACTIONS) == chain.expected_reveals()
            assert expected_runtime(tree, Metric.SHUFFLE_ACTIONS) == chain.expected_shuffles()
            passes = chain.expected_reveals() - chain.prob_any_reveal() if chain.events else 0
            assert expected_runtime(tree, Metric.BRANCH_PASSES) == passes

    def test_five_card_values(self, five_report):
        # one reveal on entry, one at the card-4 or card-3 branch,
        # and a third on the heart-retry path (probability 1/3)
        assert five_report.expected == {
            "turn_actions": F(7, 3), "shuffle_actions": F(14, 3), "branch_passes": F(4, 3)}

    def test_five_card_path_sum(self, five):
        dist = ConcreteChain(five, 0, 0).transcript_distribution()
        assert sum(len(t) * p for t, p in dist.items()) == F(7, 3)

    def test_single_shuffle(self):
        ast = parse_protocol(HEADER + "shuffle uniform { id ; (1 3)(2 4) }\nresult 1 2")
        assert expected_runtime(build_kwh_tree(ast), Metric.SHUFFLE_ACTIONS) == 1

    def test_refuses_divergent(self):
        from kwhcheck.markov import DivergenceError
        ast = parse_protocol(HEADER + "loop:\n  shuffle uniform { id ; (1 3)(2 4) }\n  goto loop")
        with pytest.raises(DivergenceError):
            expected_runtime(build_kwh_tree(ast), Metric.TURN_ACTIONS)


class TestShuffles:
    def test_four_card(self, four):
        a = analyze_shuffles(four)
        assert a.uniform and not a.closed
        star = next(r for r in a.rows if r.at == "star")
        assert star.label() == "{id,(1 3),(1 2 3 4)}" and not star.closed and star.group_order == 8

    def test_five_card(self, five):
        a = analyze_shuffles(five)
        assert a.uniform and not a.closed
        assert any(r.label() == "{id,(1 3),(1 2)(3 5 4)}" and not r.closed for r in a.rows)

    def test_trick(self, trick):
        (row,) = analyze_shuffles(trick).rows
        assert row.uniform and row.closed and row.group_order == 5
        assert row.label() == "cyclic 5"

    def test_nonuniform(self, nonuniform):
        a = analyze_shuffles(nonuniform)
        assert not a.uniform
        assert a.rows[0].label() == "{id:3/4,(1 3)(2 4):1/4}"


class TestReport:
    def test_four_card_row(self, four_report):
        r = four_report
        assert (r.secure.ok, r.correct.ok, r.restart_free) == (True, True, True)
        assert r.termination.kind is TerminationClass.LAS_VEGAS
        assert r.expected["branch_passes"] == 3
        assert r.table_row() == {"finite": "no", "uniform": "yes", "closed": "no"}

    def test_five_card_row(self, five_report):
        r = five_report
        assert (r.secure.ok, r.correct.ok, r.restart_free) == (True, True, True)
        assert r.table_row() == {"finite": "yes", "uniform": "yes", "closed": "no"}

    def test_leaky(self, leaky):
        r = full_report(leaky)
        assert not r.secure.ok and "C???" in r.secure.witness
        assert not r.passed

    def test_restart_free(self, four, five, trick, leaky):
        assert all(check_restart_free(a) for a in (four, five, trick, leaky))

    def test_invalid_protocol(self):
        r = report_from_source(HEADER + "result 2 2")
        assert not r.secure.ok and "invalid protocol" in r.secure.witness

    def test_stable_under_renaming_and_reordering(self):
        src = get_entry("four_card_and").source
        renamed = (src.replace("heart_retry", "hr").replace("club_retry", "cr")
                      .replace("dagger", "d2").replace("star", "s2")
                      .replace("{ id ; (1 3) ; (1 2 3 4) }", "{ (1 2 3 4) ; id ; (1 3) }"))
        a, b = report_from_source(src), report_from_source(renamed)
        assert (a.secure, a.correct, a.termination.kind, a.expected, a.table_row()) == \
               (b.secure, b.correct, b.termination.kind, b.expected, b.table_row())
