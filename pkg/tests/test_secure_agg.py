from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fedrank.lehmer import lehmer_layout
from fedrank.secure_agg import (
    LayoutError,
    borda_ring,
    deal_masks,
    lehmer_high_widths,
    mask,
    ring_bits,
    tally_cost,
    unmask_sum,
)


def layouts():
    return st.lists(st.integers(2, 10_000), min_size=1, max_size=12)


class TestMasks:
    @given(st.integers(2, 12), layouts(), st.integers(0, 2**32 - 1))
    def test_zero_sum(self, num, moduli, seed):
        q = np.array(moduli)
        z = deal_masks(num, q, np.random.default_rng(seed))
        assert z.shape == (num, q.size)
        assert (z >= 0).all() and (z < q).all()
        assert (z.sum(axis=0) % q == 0).all()

    def test_two_clients(self):
        q = np.array([5, 7, 64])
        z = deal_masks(2, q, np.random.default_rng(1))
        assert z[1].tolist() == ((q - z[0]) % q).tolist()

    def test_needs_two_clients(self):
        with pytest.raises(ValueError):
            deal_masks(1, [5], np.random.default_rng(0))

    def test_rejects_tiny_modulus(self):
        with pytest.raises(LayoutError):
            deal_masks(3, [1, 4], np.random.default_rng(0))

    @pytest.mark.parametrize("q", range(2, 8))
    def test_masked_value_exactly_uniform(self, q):
        # every plaintext maps the uniform mask onto each ring element exactly once
        for y in range(q):
            outs = sorted(int(mask([y], [z], [q])[0]) for z in range(q))
            assert outs == list(range(q))

    def test_masked_value_uniform_large_ring(self):
        q, n = 64, 64_000
        z = deal_masks(5, np.full(n, q), np.random.default_rng(8))
        counts = np.bincount(mask(np.full(n, 17), z[0], np.full(n, q)), minlength=q)
        assert stats.chisquare(counts).pvalue > 1e-3


class TestMaskArithmetic:
    def test_zero_mask_is_identity(self):
        assert mask([1, 2, 3], [0, 0, 0], [4, 4, 4]).tolist() == [1, 2, 3]

    @given(st.integers(2, 8), layouts(), st.integers(0, 2**32 - 1))
    @settings(max_examples=60)
    def test_unmask_recovers_sum(self, num, moduli, seed):
        rng = np.random.default_rng(seed)
        q = np.array(moduli)
        msgs = rng.integers(0, q, size=(num, q.size))
        z = deal_masks(num, q, rng)
        masked = np.stack([mask(m, zz, q) for m, zz in zip(msgs, z)])
        assert unmask_sum(masked, q).tolist() == (msgs.sum(axis=0) % q).tolist()

    def test_zero_messages(self):
        q = np.full(4, 9)
        z = deal_masks(3, q, np.random.default_rng(0))
        masked = np.stack([mask(np.zeros(4), zz, q) for zz in z])
        assert unmask_sum(masked, q).tolist() == [0, 0, 0, 0]

    def test_layout_mismatch(self):
        with pytest.raises(LayoutError):
            mask([1, 2], [0], [4, 4])
        with pytest.raises(LayoutError):
            unmask_sum(np.zeros((2, 3)), [4, 4])

    def test_out_of_range_message(self):
        with pytest.raises(ValueError, match="coordinate 1"):
            mask([0, 4], [0, 0], [4, 4])


class TestLedger:
    def test_ring_bits(self):
        assert ring_bits([2, 3, 4, 5, 128, 129]).tolist() == [1, 2, 2, 3, 7, 8]

    def test_borda_example(self):
        assert borda_ring(10, 10) == 128
        led = tally_cost("borda", 10, 10)
        assert led.per_client_bits == 70 and led.total_bits == 700
        assert led.reference_bits == pytest.approx(100 * math.log2(10))

    @pytest.mark.parametrize("n,num", [(3, 1), (7, 4), (10, 10), (33, 50), (100, 7)])
    def test_borda_closed_form(self, n, num):
        assert tally_cost("borda", n, num).total_bits == num * n * math.ceil(math.log2(n * num + 1))

    def test_borda_doubling_slope(self):
        for n in (8, 16, 32, 64, 128):
            a = tally_cost("borda", n, 10).total_bits
            b = tally_cost("borda", 2 * n, 10).total_bits
            ratio = b / a
            assert ratio <= 2 * (math.log2(2 * n) / math.log2(n)) + 0.05

    def test_lehmer_full_width_has_no_high_part(self):
        led = tally_cost("lehmer", 10, 10, trunc_bits=4)
        assert led.breakdown["high"] == 0
        assert led.per_client_bits == 10 * 16 * 4

    @pytest.mark.parametrize("n,num,bits", [(10, 10, 1), (10, 10, 4), (20, 3, 2), (64, 50, 3), (5, 1, 1)])
    def test_lehmer_closed_form(self, n, num, bits):
        widths = lehmer_high_widths(n, bits)
        high = sum(w + math.ceil(math.log2(num)) for w in widths.tolist() if w > 0)
        hist = n * 2**bits * math.ceil(math.log2(num + 1))
        led = tally_cost("lehmer", n, num, trunc_bits=bits)
        assert led.breakdown == {"high": high, "histogram": hist}
        assert led.total_bits == num * (high + hist)
        moduli, _ = lehmer_layout(n, num, bits)
        assert led.per_client_bits == int(ring_bits(moduli).sum())

    def test_ledger_parts_add_up(self):
        for led in (tally_cost("borda", 9, 4), tally_cost("lehmer", 9, 4, trunc_bits=2)):
            assert sum(led.breakdown.values()) == led.per_client_bits
            assert led.to_dict()["total_bits"] == led.per_client_bits * 4

    def test_unknown_protocol(self):
        with pytest.raises(ValueError):
            tally_cost("huffman", 4, 2)


def test_lehmer_cost_scaling_on_doubling_sweep():
    # bits / (L N log L max(log N, log M)) stays bounded once the truncation
    # width no longer hits its ceiling
    from fedrank import mallows
    from fedrank.lehmer import truncation_bits

    num = 10
    for m in (100, 10**4, 10**6):
        prev = None
        for n in (2**k for k in range(9, 15)):
            p, ok = mallows.displacement_p(n, 0.5)
            assert ok
            led = tally_cost("lehmer", n, num, trunc_bits=truncation_bits(m, n, 0.05, p))
            ratio = led.total_bits / (num * n * math.log2(num) * max(math.log2(n), math.log2(m)))
            assert ratio < 64
            if prev is not None:
                assert ratio <= 2 * prev
            prev = ratio
