from fractions import Fraction

import numpy as np
import pytest

from gkpd.complexity import (
    ConfigCandidate,
    count_macs_direct,
    count_macs_kron,
    enumerate_candidates,
    flops_reduction,
    memory_reduction,
    num_params,
    select_configuration,
    separable_flops_reduction,
    separable_pair,
)
from gkpd.decomposition import FactorShapePair, gkpd_solve
from gkpd.errors import ParameterError
from gkpd.kronconv import ConvFactorPair, ConvGeometry, MacCounter, conv2d_direct, kron_conv_forward
from gkpd.tensor import kron


class TestMemoryReduction:
    def test_worked_example(self):
        pair = FactorShapePair((8, 4, 1, 1), (8, 8, 3, 3))
        assert memory_reduction(pair, 1) == Fraction(18432, 608)
        assert float(memory_reduction(pair, 1)) == pytest.approx(30.315789, rel=1e-6)
        assert memory_reduction(pair, 2) == memory_reduction(pair, 1) / 2

    def test_matches_stored_parameters(self):
        w = np.random.default_rng(0).standard_normal((8, 4, 3, 3))
        pair = FactorShapePair.from_shape_b(w.shape, (2, 2, 3, 1))
        for r in (1, 2, 5):
            d = gkpd_solve(w, pair, r)
            assert d.num_params == num_params(pair, r)
            assert memory_reduction(pair, r) * d.num_params == w.size


class TestFlopsReduction:
    def test_formula(self):
        pair = FactorShapePair((8, 4, 1, 1), (8, 8, 3, 3))
        # |A| |B| / (F2 |A| + C1 |B|)
        assert flops_reduction(pair, 1) == Fraction(32 * 576, 8 * 32 + 4 * 576)
        assert flops_reduction(pair, 3) == flops_reduction(pair, 1) / 3

    @pytest.mark.parametrize("f1,c1,f2,c2", [(6, 1, 1, 6), (6, 5, 7, 6), (16, 2, 3, 32), (1, 1, 1, 1)])
    def test_separable(self, f1, c1, f2, c2):
        pair = separable_pair(f1, c1, f2, c2)
        assert pair.target_shape[2:] == (3, 3)
        assert flops_reduction(pair, 1) == separable_flops_reduction(f1, c2)
        assert flops_reduction(pair, 1) == Fraction(3 * f1 * c2, f1 + c2)

    def test_separable_substitution(self):
        assert separable_flops_reduction(6, 6) == 9

    def test_instrumented_ratio(self):
        # stage one covers exactly the output grid when A is spatially 1x1
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 2, 1, 1))
        b = rng.standard_normal((3, 4, 3, 3))
        x = rng.standard_normal((8, 12, 12))
        g = ConvGeometry(1, 1)
        direct, kr = MacCounter(), MacCounter()
        kron_conv_forward(ConvFactorPair(a, b), x, g, kr)
        conv2d_direct(kron(a, b), x, g, direct)
        pair = FactorShapePair(a.shape, b.shape)
        assert Fraction(direct.total, kr.total) == flops_reduction(pair, 1)


class TestMacCounts:
    def test_unit_kernel(self):
        assert count_macs_direct((1, 1, 1, 1), (1, 4, 4)) == 16

    def test_degenerate_b(self):
        # B = 1x1x1x1: stage two is the plain convolution with A, stage one is a scaling pass
        a_shape = (3, 2, 3, 3)
        pair = FactorShapePair(a_shape, (1, 1, 1, 1))
        x_shape = (2, 9, 9)
        g = ConvGeometry(1, 1)
        scaling = 2 * (9 + 2) * (9 + 2)
        assert count_macs_kron(pair, 1, x_shape, g) == count_macs_direct(a_shape, x_shape, g) + scaling
        counter = MacCounter()
        rng = np.random.default_rng(0)
        kron_conv_forward(
            ConvFactorPair(rng.standard_normal(a_shape), np.ones((1, 1, 1, 1))),
            rng.standard_normal(x_shape),
            g,
            counter,
        )
        assert counter.total == count_macs_kron(pair, 1, x_shape, g)
        assert counter.by_stage["stage1"] == scaling

    def test_randomized_closed_form(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            sa = tuple(int(v) for v in rng.integers(1, 4, 4))
            sb = tuple(int(v) for v in rng.integers(1, 4, 4))
            pair = FactorShapePair(sa, sb)
            f, c, kh, kw = pair.target_shape
            g = ConvGeometry(tuple(rng.integers(1, 4, 2)), tuple(rng.integers(0, 3, 2)))
            h = int(rng.integers(max(1, kh - 2 * g.padding[0]), kh + 6))
            w = int(rng.integers(max(1, kw - 2 * g.padding[1]), kw + 6))
            x = rng.standard_normal((c, h, w))
            direct, kr = MacCounter(), MacCounter()
            kron_conv_forward(ConvFactorPair(np.ones(sa), np.ones(sb)), x, g, kr)
            conv2d_direct(np.ones(pair.target_shape), x, g, direct)
            assert kr.total == count_macs_kron(pair, 1, x.shape, g)
            assert direct.total == count_macs_direct(pair.target_shape, x.shape, g)


class TestEnumerate:
    def test_trivial_shape(self):
        cands = enumerate_candidates((1, 1, 1, 1))
        assert len(cands) == 1
        assert cands[0].pair.shape_a == cands[0].pair.shape_b == (1, 1, 1, 1)
        assert cands[0].r_hat == 1

    def test_divisor_count(self):
        assert len(enumerate_candidates((4, 2, 1, 1))) == 6

    def test_filter(self):
        cands = enumerate_candidates((64, 64, 3, 3), min_flops_reduction=5)
        assert cands
        assert all(c.flops_reduction >= 5 for c in cands)
        everything = enumerate_candidates((64, 64, 3, 3))
        assert len(everything) > len(cands)
        assert {(c.pair, c.r_hat) for c in everything if c.flops_reduction >= 5} == {
            (c.pair, c.r_hat) for c in cands
        }

    def test_rank_limits(self):
        cands = enumerate_candidates((4, 2, 1, 1), r_hat_range=(1, 10))
        assert all(c.r_hat <= c.pair.full_rank for c in cands)
        assert len({(c.pair, c.r_hat) for c in cands}) == len(cands)

    def test_deterministic_order(self):
        c1 = enumerate_candidates((8, 6, 3, 3), r_hat_range=(1, 3))
        c2 = enumerate_candidates((8, 6, 3, 3), r_hat_range=(1, 3))
        assert c1 == c2
        keys = [(c.params, c.pair.shape_a, c.pair.shape_b, c.r_hat) for c in c1]
        assert keys == sorted(keys)

    def test_empty_is_not_error(self):
        assert enumerate_candidates((2, 2, 1, 1), min_flops_reduction=1e9) == []

    def test_bad_range(self):
        with pytest.raises(ParameterError):
            enumerate_candidates((2, 2, 1, 1), r_hat_range=(0, 2))


class TestSelect:
    def test_planted(self):
        rng = np.random.default_rng(0)
        w = kron(rng.standard_normal((4, 2, 3, 1)), rng.standard_normal((2, 4, 1, 3)))
        sel = select_configuration(w, enumerate_candidates(w.shape, min_memory_reduction=2))
        assert sel.best.error <= 1e-9
        assert sel.decomposition.achieved_error == sel.best.error

    def test_single_candidate(self):
        w = np.random.default_rng(1).standard_normal((4, 4, 1, 1))
        cand = ConfigCandidate.build(FactorShapePair((2, 2, 1, 1), (2, 2, 1, 1)), 1)
        sel = select_configuration(w, [cand])
        assert sel.best.pair == cand.pair and len(sel.candidates) == 1

    def test_empty(self):
        with pytest.raises(ParameterError):
            select_configuration(np.ones((2, 2, 1, 1)), [])

    def test_exhaustive_winner(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((16, 16, 3, 3))
        cands = enumerate_candidates(w.shape, min_flops_reduction=2, r_hat_range=(1, 2))
        sel = select_configuration(w, cands)
        for c in cands:
            assert sel.best.error <= gkpd_solve(w, c.pair, c.r_hat).achieved_error + 1e-12
        keys = [c.sort_key() for c in sel.candidates]
        assert keys == sorted(keys)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal((8, 4, 3, 3))
        cands = enumerate_candidates(w.shape, min_memory_reduction=2, r_hat_range=(1, 3))
        base = select_configuration(w, cands)
        for _ in range(3):
            shuffled = [cands[i] for i in rng.permutation(len(cands))]
            sel = select_configuration(w, shuffled)
            assert sel.best == base.best
            assert sel.candidates == base.candidates
