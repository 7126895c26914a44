import pytest

from cantorlab.core import Clopen, ScenarioError
from cantorlab.deficiency import Stream, member_at_stage, rd_at_stage
from cantorlab.enumeration import shift_union
from cantorlab.realizers import (
    InnerReduction,
    cn_times_mlr_psi,
    cn_times_mlr_to_lay,
    compose_star,
    compose_star_psi,
    default_grace,
    delta02_to_lay_phi,
    delta02_to_lay_psi,
    identity_reduction,
    lay_to_cn,
    lay_to_cn_psi,
    lay_to_lay,
    lay_to_lay_contract,
    parallel_merge,
    product_merge,
    rd_from_lay_phi,
    rd_from_lay_psi,
    rd_from_lay_run,
    semidecidable_to_rd_star,
    stable_value,
    verify_pads,
)


@pytest.fixture(scope="module")
def budgets(main_scenario):
    return main_scenario.budgets


class TestLayToLay:
    def test_untriggered_output_is_source(self, chain, surrogate, budgets,
                                          main_scenario):
        x = main_scenario.stream("alt")  # escapes everything from stage 0
        run = lay_to_lay(chain, surrogate, x, budgets)
        assert not run.pads
        assert run.output.pad == x.pad and run.output.period == x.period
        assert run.data["final_index"] == 0

    def test_output_shape(self, chain, surrogate, budgets, main_scenario):
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = lay_to_lay(chain, surrogate, x, budgets)
            base = run.pads[-1]["end"] if run.pads else 0
            tail = run.committed[base:]
            assert x.prefix(len(tail)) == tail
            assert run.trace.all_passed()

    def test_decoded_bounds(self, chain, surrogate, budgets, main_scenario):
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = lay_to_lay(chain, surrogate, x, budgets)
            assert lay_to_lay_contract(run, chain, surrogate, x, budgets)
            out_rd = rd_at_stage(run.output, surrogate, big_s).value
            for i in range(out_rd, chain.max_index + 1):
                assert not member_at_stage(x, chain, i, big_s)

    def test_final_index_is_tail_union_rd(self, chain, surrogate, budgets,
                                          main_scenario):
        vp = shift_union(chain)
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = lay_to_lay(chain, surrogate, x, budgets)
            assert run.data["final_index"] == rd_at_stage(x, vp, big_s).value

    def test_pads_valid_against_final_views(self, chain, surrogate, budgets,
                                            main_scenario):
        x = main_scenario.stream("x3")
        run = lay_to_lay(chain, surrogate, x, budgets)
        assert verify_pads(run, surrogate, budgets.max_stage)


class TestRdFromLay:
    def test_zero_deficiency_identity(self, surrogate, budgets, main_scenario):
        x = main_scenario.stream("alt")
        run = rd_from_lay_run(surrogate, surrogate, x, budgets)
        assert not run.pads
        assert run.data["decoded"] == 0
        for k in range(0, budgets.max_stage, 50):
            assert rd_from_lay_psi(surrogate, x, k, budgets) == 0

    def test_exact_at_every_admissible_advice(self, surrogate, budgets,
                                              main_scenario):
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = rd_from_lay_run(surrogate, surrogate, x, budgets)
            expected = run.data["expected"]
            threshold = run.data["advice"]
            for k in range(threshold, big_s + 1):
                assert rd_from_lay_psi(surrogate, x, k, budgets) == expected

    def test_decoder_monotone_to_stable(self, surrogate, budgets, main_scenario):
        x = main_scenario.stream("x3")
        values = [rd_from_lay_psi(surrogate, x, k, budgets)
                  for k in range(budgets.max_stage + 1)]
        for a, b in zip(values, values[1:]):
            assert a <= b

    def test_witnesses(self, surrogate, budgets, main_scenario):
        x = main_scenario.stream("x2")
        run = rd_from_lay_run(surrogate, surrogate, x, budgets)
        assert run.trace.all_passed()

    def test_distinct_test_pair(self, chain, surrogate, budgets, main_scenario):
        # recover the bound against the chain while padding into the flat test
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = rd_from_lay_run(chain, surrogate, x, budgets)
            assert run.data["decoded"] == run.data["expected"] \
                == rd_at_stage(x, chain, big_s).value


class TestProductMerge:
    def test_requires_nested(self, surrogate, budgets, main_scenario):
        with pytest.raises(ScenarioError):
            product_merge(surrogate, main_scenario.stream("alt"),
                          main_scenario.stream("x1"), budgets)

    def test_same_stream_degenerates(self, chain, budgets, main_scenario):
        x = main_scenario.stream("x2")
        run = product_merge(chain, x, x, budgets)
        big_s = budgets.max_stage
        assert rd_at_stage(run.output, chain, big_s).value >= \
            rd_at_stage(x, chain, big_s).value

    def test_dominates_all_pairs(self, chain, budgets, main_scenario):
        big_s = budgets.max_stage
        names = list(main_scenario.random_streams)
        for nx in names:
            for ny in names:
                x, y = main_scenario.stream(nx), main_scenario.stream(ny)
                run = product_merge(chain, x, y, budgets)
                got = rd_at_stage(run.output, chain, big_s).value
                want = max(rd_at_stage(x, chain, big_s).value,
                           rd_at_stage(y, chain, big_s).value)
                assert got >= want, (nx, ny)

    def test_decoder_diagonal(self):
        from cantorlab.realizers import product_merge_decoder
        assert product_merge_decoder(4) == (4, 4)


class TestParallelMerge:
    def test_singleton_family(self, surrogate, budgets, main_scenario):
        x = main_scenario.stream("x1")
        run = parallel_merge(surrogate, [x], budgets)
        big_s = budgets.max_stage
        assert rd_at_stage(run.output, surrogate, big_s).value >= \
            rd_at_stage(x, surrogate, big_s).value

    def test_declared_family_dominated(self, surrogate, budgets, main_scenario):
        xs = [main_scenario.stream(n) for n in main_scenario.parallel_family]
        run = parallel_merge(surrogate, xs, budgets)
        big_s = budgets.max_stage
        got = rd_at_stage(run.output, surrogate, big_s).value
        assert got >= main_scenario.parallel_bound
        assert run.trace.all_passed()


class TestComposeStar:
    def test_identity_identity(self, chain, budgets, main_scenario):
        x = main_scenario.stream("x2")
        run = compose_star(chain, identity_reduction(), identity_reduction(),
                           x, budgets)
        big_s = budgets.max_stage
        assert rd_at_stage(run.output, chain, big_s).value >= \
            rd_at_stage(x, chain, big_s).value

    def test_watermarks(self, chain, surrogate, budgets, main_scenario):
        inner_f = InnerReduction(
            phi=lambda s: rd_from_lay_phi(surrogate, surrogate, s, budgets).output,
            psi=lambda s, m: rd_from_lay_psi(surrogate, s, m, budgets))
        x = main_scenario.stream("x3")
        run = compose_star(chain, inner_f, identity_reduction(), x, budgets)
        big_s = budgets.max_stage
        assert run.data["d_y"] == rd_at_stage(run.data["y"], chain, big_s).value
        assert run.data["d_z"] >= rd_at_stage(run.data["z"], chain, big_s).value
        # the companion watermark only moves after the first settles or when
        # it is already ahead: no dz event precedes a dy event at the same level
        dy_events = [s for kind, s, _ in run.data["events"] if kind == "dy"]
        dz_events = [s for kind, s, _ in run.data["events"] if kind == "dz"]
        if dy_events and dz_events:
            assert max(dz_events) >= max(dy_events) or not dz_events

    def test_end_to_end_decoding(self, chain, surrogate, budgets, main_scenario):
        inner_f = InnerReduction(
            phi=lambda s: rd_from_lay_phi(surrogate, surrogate, s, budgets).output,
            psi=lambda s, m: rd_from_lay_psi(surrogate, s, m, budgets))
        inner_g = identity_reduction()
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = compose_star(chain, inner_f, inner_g, x, budgets)
            n = rd_at_stage(run.data["y"], chain, big_s).value
            m = rd_at_stage(run.output, chain, big_s).value
            decoded = compose_star_psi(inner_f, inner_g, x, n, m)
            assert decoded == rd_at_stage(x, surrogate, big_s).value


class TestLayToCn:
    def test_decoder_examples(self, surrogate):
        assert lay_to_cn_psi(12, surrogate) == 0
        assert lay_to_cn_psi(125, surrogate) == 2

    def test_survivor_round_trip(self, surrogate, budgets, main_scenario):
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = lay_to_cn(surrogate, x, budgets)
            assert run.survivor_unique
            expected = rd_at_stage(x, surrogate, big_s).value
            assert lay_to_cn_psi(run.survivor, surrogate) == expected
            assert run.final_index == expected

    def test_instance_values_code_complement(self, surrogate, budgets,
                                             main_scenario):
        run = lay_to_cn(surrogate, main_scenario.stream("x1"), budgets)
        values = run.instance_values()
        assert run.survivor + 1 not in values
        assert 0 not in values  # values code n+1


class TestCnTimesMlr:
    def test_stable_value_definition(self):
        f = [1, 3, 2, 5, 4]
        assert [stable_value(f, s) for s in range(6)] == [1, 1, 3, 3, 5, 5]
        for s in range(8):
            assert stable_value(f, s) <= stable_value(f, s + 1)

    def test_omega_instance(self, surrogate, budgets, main_scenario):
        x = main_scenario.stream("x1")
        run = cn_times_mlr_to_lay(surrogate, [], x, budgets)
        stable_events = [e for e in run.trace.events if e["action"] == "stable"]
        assert len(stable_events) == budgets.max_stage  # every stage fires
        n, tag = cn_times_mlr_psi([], x, 0)
        assert n == 0 and tag is x

    def test_full_contract_excluding_prefix(self, surrogate, budgets,
                                            main_scenario):
        f = [1, 3, 2, 5, 4]  # excludes 0..4, survivor 5
        x = main_scenario.stream("x2")
        run = cn_times_mlr_to_lay(surrogate, f, x, budgets)
        big_s = budgets.max_stage
        report = rd_at_stage(run.output, surrogate, big_s)
        for s in range(report.value, big_s + 1, 7):
            n, _ = cn_times_mlr_psi(f, x, s)
            assert n == 5

    def test_shape(self, surrogate, budgets, main_scenario):
        run = cn_times_mlr_to_lay(surrogate, [2, 1], main_scenario.stream("x3"),
                                  budgets)
        assert run.trace.all_passed()


@pytest.fixture(scope="module")
def trees(main_scenario):
    t = [main_scenario.tree(n) for n in ("inA0", "inA1", "inA2")]
    s = [main_scenario.tree(n) for n in ("outA0", "outA1", "outA2")]
    return t, s


class TestDelta02:

    def test_path_stream_never_retriggers(self, chain, budgets, main_scenario,
                                          trees):
        t_trees, s_trees = trees
        x = main_scenario.stream("x1")  # a path through the first in-side tree
        run = delta02_to_lay_phi(chain, t_trees, s_trees, x, budgets)
        assert run.data["final_index"] == 0
        assert len(run.pads) == 1  # only the initial block

    def test_psi_matches_membership_oracle(self, chain, budgets, main_scenario,
                                           trees):
        t_trees, s_trees = trees
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = delta02_to_lay_phi(chain, t_trees, s_trees, x, budgets)
            advice = rd_at_stage(run.output, chain, big_s).value
            want = 1 if any(t.carries(x, big_s) for t in t_trees) else 0
            for k in range(advice, advice + 4):
                got = delta02_to_lay_psi(t_trees, s_trees, x, k,
                                         budgets.max_depth, big_s)
                assert got == want, (name, k)

    def test_partition_violation_detected(self, budgets):
        from cantorlab.deficiency import static_cotree
        # a stream that is a path through both sides never clears either
        both_t = [static_cotree(["1"], budgets.max_depth)]   # paths below 0
        both_s = [static_cotree(["01", "1"], budgets.max_depth)]  # paths below 00
        x = Stream("bad", "", "0")
        with pytest.raises(ScenarioError):
            delta02_to_lay_psi(both_t, both_s, x, 0, budgets.max_depth,
                               budgets.max_stage)

    def test_clopen_set_special_case(self, chain, budgets, main_scenario):
        # in-side an effectively open (clopen) set; out-side its complement,
        # a positive-measure tree
        from cantorlab.core import Clopen
        from cantorlab.deficiency import static_cotree
        open_set = Clopen(["0010", "000010"])
        depth = budgets.max_depth
        t_trees = [static_cotree(open_set.complement(depth).cylinders, depth)]
        s_trees = [static_cotree(open_set.cylinders, depth)]
        big_s = budgets.max_stage
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = delta02_to_lay_phi(chain, t_trees, s_trees, x, budgets)
            advice = rd_at_stage(run.output, chain, big_s).value
            got = delta02_to_lay_psi(t_trees, s_trees, x, advice, depth, big_s)
            want = 1 if open_set.covers(x.prefix(depth)) else 0
            assert got == want, name


class TestSemiDecidable:
    def test_out_stream_identity_and_zero(self, surrogate, budgets,
                                          main_scenario):
        x = main_scenario.stream("x4")  # outside the target set
        run = semidecidable_to_rd_star(surrogate, main_scenario.opens["layerA"],
                                       surrogate, x, budgets)
        assert run.verdict == 0 == run.expected
        assert not run.f_run.pads  # output is the source unchanged
        for m in (0, 3, 100, budgets.max_stage):
            view = main_scenario.opens["layerA"][run.level].stage_view(m)
            assert not any(x.starts_with(c) for c in view.cylinders)

    def test_in_stream_certified(self, surrogate, budgets, main_scenario):
        x = main_scenario.stream("x3")
        run = semidecidable_to_rd_star(surrogate, main_scenario.opens["layerA"],
                                       surrogate, x, budgets)
        assert run.verdict == 1 == run.expected
        assert run.f_run.pads
        # the advice certifies the discovery stage
        assert run.f_advice >= run.f_run.pads[0]["stage"]

    def test_characteristic_on_all_streams(self, surrogate, budgets,
                                           main_scenario):
        for name in main_scenario.random_streams:
            x = main_scenario.stream(name)
            run = semidecidable_to_rd_star(surrogate,
                                           main_scenario.opens["layerA"],
                                           surrogate, x, budgets)
            assert run.verdict == run.expected


class TestMonotonicityAndShape:
    def test_histories_monotone(self, chain, surrogate, budgets, main_scenario):
        runs = []
        x = main_scenario.stream("x2")
        runs.append(lay_to_lay(chain, surrogate, x, budgets))
        runs.append(rd_from_lay_phi(surrogate, surrogate, x, budgets))
        runs.append(product_merge(chain, x, main_scenario.stream("x1"), budgets))
        for run in runs:
            hist = run.data["history"]
            assert all(a <= b for a, b in zip(hist, hist[1:]))
            assert run.trace.all_passed()

    def test_grace_default_tracks_budget(self, budgets):
        assert default_grace(budgets) == (3 * budgets.max_stage) // 4

    def test_productivity_scales_with_stage_budget(self, surrogate,
                                                   main_scenario):
        from cantorlab.enumeration import Budgets
        x = main_scenario.stream("x2")
        b = main_scenario.budgets
        lengths = []
        for stages in (256, 512):
            shrunk = Budgets(max_index=b.max_index, max_stage=stages,
                             max_depth=b.max_depth, max_layers=b.max_layers)
            run = rd_from_lay_phi(surrogate, surrogate, x, shrunk)
            lengths.append(len(run.committed))
        assert lengths[0] < lengths[1]
