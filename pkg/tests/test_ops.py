import math

import pytest
import torch

from shiftfusion.errors import ConfigError, DimensionError
from shiftfusion.tensor import (
    BiGRU,
    LayerNorm,
    MultiHeadAttention,
    RngState,
    dropout,
    layer_norm,
    linear,
    multi_head_attention,
    scaled_dot_attention,
    softmax,
    use_rng,
)
from shiftfusion.tensor.layers import Dropout


def test_linear_names_mismatched_axis():
    with pytest.raises(DimensionError, match="axis -1"):
        linear(torch.zeros(2, 3), torch.zeros(4, 5))


def test_linear_matches_matmul():
    x = torch.randn(2, 3, dtype=torch.float64)
    w = torch.randn(4, 3, dtype=torch.float64)
    b = torch.randn(4, dtype=torch.float64)
    torch.testing.assert_close(linear(x, w, b), x @ w.T + b)


def test_layer_norm_normalises_rows():
    x = torch.randn(5, 16, dtype=torch.float64) * 3 + 2
    y = layer_norm(x, torch.ones(16, dtype=torch.float64), torch.zeros(16, dtype=torch.float64))
    torch.testing.assert_close(y.mean(-1), torch.zeros(5, dtype=torch.float64), atol=1e-9, rtol=0)
    torch.testing.assert_close(
        y.var(-1, correction=0), torch.ones(5, dtype=torch.float64), atol=1e-4, rtol=0
    )


def test_softmax_rows_and_shift_invariance():
    x = torch.randn(3, 7, dtype=torch.float64)
    p = softmax(x)
    torch.testing.assert_close(p.sum(-1), torch.ones(3, dtype=torch.float64))
    torch.testing.assert_close(softmax(x + 123.0), p)


def test_softmax_large_logits_stay_finite():
    p = softmax(torch.tensor([1000.0, 0.0]))
    assert torch.isfinite(p).all()
    assert p[0] == pytest.approx(1.0)


class TestDropout:
    def test_identity_in_eval_and_at_zero_rate(self):
        x = torch.randn(4, 4)
        assert dropout(x, 0.5, training=False) is x
        assert dropout(x, 0.0, training=True) is x

    @pytest.mark.parametrize("rate", [1.0, 1.5, -0.1])
    def test_rejects_bad_rate(self, rate):
        with pytest.raises(ConfigError):
            dropout(torch.ones(3), rate, training=True)
        with pytest.raises(ConfigError):
            Dropout(rate)

    def test_same_seed_same_mask(self):
        x = torch.ones(64, 64)
        a = dropout(x, 0.3, True, RngState(7))
        b = dropout(x, 0.3, True, RngState(7))
        assert torch.equal(a, b)
        assert not torch.equal(a, dropout(x, 0.3, True, RngState(8)))

    def test_inverted_scaling_preserves_mean(self):
        x = torch.ones(200, 200, dtype=torch.float64)
        y = dropout(x, 0.25, True, RngState(0))
        kept = y[y != 0]
        torch.testing.assert_close(kept, torch.full_like(kept, 1 / 0.75))
        assert y.mean().item() == pytest.approx(1.0, abs=0.02)

    def test_layer_uses_active_rng(self):
        layer = Dropout(0.5).train()
        x = torch.ones(32, 32)
        with use_rng(RngState(3)):
            a = layer(x)
        with use_rng(RngState(3)):
            b = layer(x)
        assert torch.equal(a, b)

    def test_draw_counter_advances(self):
        rng = RngState(0)
        dropout(torch.ones(3, 5), 0.1, True, rng)
        assert rng.position == 15


class TestAttention:
    def test_identical_keys_give_uniform_weights(self):
        q = torch.randn(3, 4, dtype=torch.float64)
        k = torch.ones(5, 4, dtype=torch.float64)
        v = torch.randn(5, 2, dtype=torch.float64)
        result = scaled_dot_attention(q, k, v)
        torch.testing.assert_close(result.weights, torch.full((3, 5), 0.2, dtype=torch.float64))
        torch.testing.assert_close(result.values, v.mean(0).expand(3, 2))

    def test_masked_keys_get_zero_weight(self):
        q, k, v = torch.randn(2, 4), torch.randn(3, 4), torch.randn(3, 4)
        mask = torch.tensor([True, False, True])
        result = scaled_dot_attention(q, k, v, mask)
        assert torch.all(result.weights[:, 1] == 0)
        torch.testing.assert_close(result.weights.sum(-1), torch.ones(2))
        assert not result.empty_rows.any()

    def test_fully_masked_rows_are_zero_and_flagged(self):
        q, k, v = torch.randn(2, 4), torch.randn(3, 4), torch.randn(3, 4)
        result = scaled_dot_attention(q, k, v, torch.zeros(3, dtype=torch.bool))
        assert torch.equal(result.values, torch.zeros(2, 4))
        assert result.empty_rows.all()

    def test_value_count_mismatch(self):
        with pytest.raises(DimensionError):
            scaled_dot_attention(torch.randn(2, 4), torch.randn(3, 4), torch.randn(2, 4))

    def test_heads_must_divide_width(self):
        with pytest.raises(ConfigError, match="not divisible"):
            MultiHeadAttention(10, 3)
        w = torch.randn(10, 10)
        with pytest.raises(ConfigError):
            multi_head_attention(torch.randn(2, 10), torch.randn(2, 10), torch.randn(2, 10), w, w, w, w, 3)

    def test_single_head_matches_hand_composition(self):
        x = torch.randn(4, 6, dtype=torch.float64)
        y = torch.randn(5, 6, dtype=torch.float64)
        w_q, w_k, w_v, w_o = (torch.randn(6, 6, dtype=torch.float64) for _ in range(4))
        out = multi_head_attention(x, y, y, w_q, w_k, w_v, w_o, 1)
        q, k, v = x @ w_q.T, y @ w_k.T, y @ w_v.T
        expected = torch.softmax(q @ k.T / math.sqrt(6), -1) @ v @ w_o.T
        torch.testing.assert_close(out, expected)

    def test_multi_head_matches_per_head_loop(self):
        heads, d = 3, 6
        x = torch.randn(2, 4, d, dtype=torch.float64)
        y = torch.randn(2, 5, d, dtype=torch.float64)
        mask = torch.tensor([[True] * 5, [True, True, False, True, False]])
        w_q, w_k, w_v, w_o = (torch.randn(d, d, dtype=torch.float64) for _ in range(4))
        out = multi_head_attention(x, y, y, w_q, w_k, w_v, w_o, heads, mask)

        d_head = d // heads
        q, k, v = x @ w_q.T, y @ w_k.T, y @ w_v.T
        expected = torch.zeros(2, 4, d, dtype=torch.float64)
        for b in range(2):
            parts = []
            for i in range(heads):
                cols = slice(i * d_head, (i + 1) * d_head)
                scores = q[b, :, cols] @ k[b, :, cols].T / math.sqrt(d_head)
                scores[:, ~mask[b]] = -math.inf
                parts.append(torch.softmax(scores, -1) @ v[b, :, cols])
            expected[b] = torch.cat(parts, dim=-1) @ w_o.T
        torch.testing.assert_close(out, expected)

    def test_batched_padding_does_not_leak(self):
        mha = MultiHeadAttention(8, 2).double()
        x = torch.randn(1, 3, 8, dtype=torch.float64)
        alone = mha(x, x, x)
        padded = torch.cat([x, torch.randn(1, 2, 8, dtype=torch.float64)], dim=1)
        mask = torch.tensor([[True, True, True, False, False]])
        batched = mha(padded, padded, padded, mask)
        torch.testing.assert_close(batched[:, :3], alone)


class TestBiGRU:
    def test_rejects_odd_width(self):
        with pytest.raises(ConfigError):
            BiGRU(7)

    def test_output_keeps_width(self):
        gru = BiGRU(8)
        assert gru(torch.randn(5, 8)).shape == (5, 8)
        assert gru(torch.randn(2, 5, 8), torch.tensor([5, 3])).shape == (2, 5, 8)

    def test_zero_weights_give_zero_output(self):
        gru = BiGRU(6)
        with torch.no_grad():
            for p in gru.parameters():
                p.zero_()
        assert torch.equal(gru(torch.randn(4, 6)), torch.zeros(4, 6))

    def test_reversed_input_swaps_directions(self):
        gru = BiGRU(6).double()
        with torch.no_grad():
            for name, p in gru.gru.named_parameters():
                if name.endswith("_reverse"):
                    p.copy_(getattr(gru.gru, name.removesuffix("_reverse")))
        x = torch.randn(5, 6, dtype=torch.float64)
        out = gru(x)
        reversed_out = gru(x.flip(0))
        torch.testing.assert_close(reversed_out[:, :3], out[:, 3:].flip(0))
        torch.testing.assert_close(reversed_out[:, 3:], out[:, :3].flip(0))

    def test_padding_matches_unpadded_run(self):
        gru = BiGRU(6).double()
        short = torch.randn(3, 6, dtype=torch.float64)
        long = torch.randn(5, 6, dtype=torch.float64)
        batch = torch.zeros(2, 5, 6, dtype=torch.float64)
        batch[0, :3] = short
        batch[1] = long
        out = gru(batch, torch.tensor([3, 5]))
        torch.testing.assert_close(out[0, :3], gru(short))
        torch.testing.assert_close(out[1], gru(long))
        assert torch.equal(out[0, 3:], torch.zeros(2, 6, dtype=torch.float64))


def test_layer_norm_module_checks_width():
    with pytest.raises(DimensionError):
        LayerNorm(4)(torch.randn(2, 5))
