import pytest
import torch

from shiftfusion.data import FeatureDims, Modality
from shiftfusion.errors import ConfigError
from shiftfusion.models import InputProjection, UnimodalEncoder, UnimodalLayer


@pytest.fixture
def encoder():
    return UnimodalEncoder(dim=8, ff_dim=16, depth=2, dropout=0.0).double().eval()


def test_shared_parameters_treat_identical_streams_identically(encoder):
    x = torch.randn(2, 5, 8, dtype=torch.float64)
    a, b, c = encoder((x, x.clone(), x.clone()))
    assert torch.equal(a, b)
    assert torch.equal(b, c)


def test_swapping_streams_swaps_outputs(encoder):
    x, y, z = (torch.randn(1, 4, 8, dtype=torch.float64) for _ in range(3))
    first = encoder((x, y, z))
    swapped = encoder((x, z, y))
    assert torch.equal(first[0], swapped[0])
    assert torch.equal(first[1], swapped[2])
    assert torch.equal(first[2], swapped[1])


def test_shapes_are_preserved(encoder):
    streams = tuple(torch.randn(3, 6, 8, dtype=torch.float64) for _ in range(3))
    assert all(out.shape == (3, 6, 8) for out in encoder(streams))


def test_padding_does_not_change_valid_positions(encoder):
    short = torch.randn(1, 3, 8, dtype=torch.float64)
    padded = torch.cat([short, torch.randn(1, 2, 8, dtype=torch.float64)], dim=1)
    alone = encoder.encode_stream(short, torch.tensor([3]))
    batched = encoder.encode_stream(padded, torch.tensor([3]))
    torch.testing.assert_close(batched[:, :3], alone)


def test_single_parameter_set():
    encoder = UnimodalEncoder(dim=8, ff_dim=16, depth=1, dropout=0.0)
    names = {name.split(".")[2] for name, _ in encoder.named_parameters()}
    assert names == {"rnn", "rnn_norm", "ff", "ff_norm"}


def test_depth_must_be_positive():
    with pytest.raises(ConfigError):
        UnimodalEncoder(dim=8, ff_dim=16, depth=0, dropout=0.0)


def test_projection_uses_slot_modality():
    proj = InputProjection(FeatureDims(text=6, visual=5, audio=4), 8)
    text, audio = torch.randn(2, 3, 6), torch.randn(2, 3, 4)
    out = proj((text, audio, audio), (Modality.TEXT, Modality.AUDIO, Modality.AUDIO))
    assert all(o.shape == (2, 3, 8) for o in out)
    assert torch.equal(out[1], out[2])
    torch.testing.assert_close(out[0], proj.proj["text"](text))


def _gru_step_from_zero(gru, x, suffix):
    """One GRU step from a zero hidden state, written out gate by gate."""
    w = getattr(gru, f"weight_ih_l0{suffix}")
    b_i = getattr(gru, f"bias_ih_l0{suffix}")
    b_h = getattr(gru, f"bias_hh_l0{suffix}")
    gates = x @ w.T + b_i
    r_in, z_in, n_in = gates.chunk(3, dim=-1)
    r_h, z_h, n_h = b_h.chunk(3)
    r = torch.sigmoid(r_in + r_h)
    z = torch.sigmoid(z_in + z_h)
    n = torch.tanh(n_in + r * n_h)
    return (1 - z) * n


def _norm(ln, x):
    mean = x.mean(-1, keepdim=True)
    var = ((x - mean) ** 2).mean(-1, keepdim=True)
    return (x - mean) / torch.sqrt(var + ln.eps) * ln.weight + ln.bias


@torch.no_grad()
def test_single_utterance_layer_matches_hand_unrolling():
    layer = UnimodalLayer(dim=8, ff_dim=16, dropout=0.0).double().eval()
    for p in layer.parameters():
        p.copy_(0.5 * torch.randn_like(p))
    x = torch.randn(1, 8, dtype=torch.float64)

    gru = layer.rnn.gru
    recurrent = torch.cat(
        [_gru_step_from_zero(gru, x, ""), _gru_step_from_zero(gru, x, "_reverse")], dim=-1
    )
    x_rr = _norm(layer.rnn_norm, x + recurrent)
    ff = torch.relu(x_rr @ layer.ff.fc1.weight.T + layer.ff.fc1.bias)
    ff = ff @ layer.ff.fc2.weight.T + layer.ff.fc2.bias
    expected = _norm(layer.ff_norm, x + x_rr + ff)

    torch.testing.assert_close(layer(x), expected)
