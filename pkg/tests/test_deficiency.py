import pytest

from cantorlab.deficiency import (
    CoTree,
    Stream,
    complement_tree,
    eval_table,
    filter_tree,
    layerwise_eval,
    member_at_stage,
    prepend,
    rd_at_stage,
    static_cotree,
)
from cantorlab.enumeration import Enumeration, MLTest
from conftest import leaf_mask


def stream_of(bits8: str) -> Stream:
    return Stream(f"s{bits8}", bits8, "01")


class TestStream:
    def test_prefix_and_bit(self):
        x = Stream("x", "001", "10")
        assert x.prefix(7) == "0011010"
        assert [x.bit(k) for k in range(5)] == list("00110")

    def test_prepend(self):
        x = Stream("x", "01", "1")
        y = prepend("110", x)
        assert y.prefix(6) == "110011"

    def test_period_required(self):
        with pytest.raises(ValueError):
            Stream("bad", "01", "")


class TestMembership:
    def test_empty_component(self):
        t = MLTest([Enumeration([])])
        assert not member_at_stage(Stream("x", "", "0"), t, 0, 3)

    def test_prefix_hit(self):
        t = MLTest([Enumeration([(0, "01")])])
        assert member_at_stage(Stream("x", "010", "0"), t, 0, 0)

    def test_exhaustive_depth8_oracle(self):
        cyls = ["0110", "10", "00010101"]
        t = MLTest([Enumeration([(0, c) for c in cyls])], check=False)
        mask = leaf_mask(cyls)
        for k in range(256):
            leaf = format(k, "08b")
            x = Stream(f"leaf{k}", leaf, leaf)  # depth-8 behaviour fixed by pad
            assert member_at_stage(x, t, 0, 0) == bool(mask >> k & 1)


class TestRd:
    def test_all_components_empty(self):
        t = MLTest([Enumeration([]), Enumeration([])])
        r = rd_at_stage(Stream("x", "", "0"), t, 0)
        assert r.value == 0 and r.determined

    def test_simple_escape(self):
        t = MLTest([Enumeration([(0, "0")])])
        assert rd_at_stage(Stream("x", "1", "1"), t, 5).value == 0

    def test_monotone_in_stage(self, surrogate, main_scenario):
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            prev = -1
            for s in range(0, 40):
                v = rd_at_stage(x, surrogate, s).value
                assert v >= prev
                prev = v

    def test_capture_overflow_flagged(self):
        t = MLTest([Enumeration([(0, "")])], check=False)
        r = rd_at_stage(Stream("x", "", "0"), t, 0)
        assert r.value == 1 and not r.determined

    def test_cylinder_argument(self, surrogate):
        # for finite strings the component must cover the whole cylinder
        t = MLTest([Enumeration([(0, "01")])])
        assert rd_at_stage("01", t, 0).value == 1  # covered: escape at top
        assert rd_at_stage("0", t, 0).value == 0   # half outside

    def test_stage_relative_on_prefixes(self, surrogate, main_scenario):
        big_s = main_scenario.budgets.max_stage
        x = main_scenario.stream("x2")
        d_stream = rd_at_stage(x, surrogate, big_s).value
        d_prefix = rd_at_stage(x.prefix(40), surrogate, big_s).value
        assert d_prefix <= d_stream

    def test_nested_membership_monotone(self, chain, main_scenario):
        big_s = main_scenario.budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            member = [member_at_stage(x, chain, i, big_s)
                      for i in range(chain.max_index + 1)]
            for i in range(len(member) - 1):
                if member[i + 1]:
                    assert member[i]


class TestFilterTree:
    def test_empty_table_is_identity(self):
        base = static_cotree(["11"], 6)
        ft = filter_tree(base, {}, 0)
        for node in ["", "0", "01", "10", "110"]:
            assert ft.contains(node) == base.alive(node, 0)

    def test_agreeing_table_is_identity(self):
        base = static_cotree(["11"], 6)
        table = {("0", 2): 2, ("10", 2): 2}
        ft = filter_tree(base, table, 2)
        for node in ["", "0", "10", "011"]:
            assert ft.contains(node) == base.alive(node, 0)

    def test_branch_pruned_against_predicate(self):
        base = static_cotree([], 6)
        table = {("01", 3): 4, ("1", 3): 3}
        ft = filter_tree(base, table, 3)
        for node in ["", "0", "00", "01", "1", "011"]:
            want = base.alive(node, 0) and (
                (node, 3) not in table or table[(node, 3)] == 3)
            assert ft.contains(node) == want
        assert not ft.contains("01")
        assert ft.contains("1")

    def test_complement_tree(self, surrogate, main_scenario):
        big_s = main_scenario.budgets.max_stage
        tree = complement_tree(surrogate, 0, main_scenario.budgets.max_depth)
        view = surrogate.stage_view(0, big_s)
        for node in ["", "0", "111", "0010", "01"]:
            assert tree.alive(node, 0) == (not view.covers(node))


class TestLayerwiseEval:
    def test_constant_table_consistent(self, surrogate, main_scenario):
        x = main_scenario.stream("x2")
        table = {("", i): 7 for i in range(13)}
        verdict = layerwise_eval(table, x, surrogate)
        assert verdict.consistent
        assert verdict.exact_value == 7

    def test_echo_table_inconsistent(self, main_scenario, surrogate):
        x = main_scenario.stream("x2")
        echo = {("", i): i for i in range(13)}
        verdict = layerwise_eval(echo, x, surrogate)
        assert len(verdict.advices) >= 2
        assert not verdict.consistent
        assert verdict.exact_value == verdict.exact_advice

    def test_divergence_reported(self, main_scenario, surrogate):
        x = main_scenario.stream("alt")
        table = {("0", 0): 1}  # hits advice 0 only; all larger advices diverge
        verdict = layerwise_eval(table, x, surrogate)
        assert verdict.divergent
        assert not verdict.consistent

    def test_eval_table_shortest_prefix(self):
        x = Stream("x", "0011", "0")
        table = {("00", 5): 9, ("0011", 5): 8}
        assert eval_table(table, x, 5, 8) == 9


class TestCoTree:
    def test_staged_death(self):
        dead = Enumeration([(0, "11"), (5, "000")])
        tree = CoTree(dead, 8)
        assert tree.alive("000", 4)
        assert not tree.alive("000", 5)
        assert not tree.alive("110", 0)

    def test_path_measure(self):
        dead = Enumeration([(0, "11")])
        tree = CoTree(dead, 8)
        from cantorlab.core import Dyadic
        assert tree.path_measure(0) == Dyadic(3, 2)

    def test_carries(self, main_scenario):
        tree = main_scenario.tree("inA0")
        assert tree.carries(main_scenario.stream("x1"), 0)
        assert not tree.carries(main_scenario.stream("alt"), 0)
