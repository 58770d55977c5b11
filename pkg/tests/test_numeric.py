"""
Testes do núcleo numérico: gradientes por diferenças finitas, camadas, BCE,
Adam e checkpoints.
Numeric core tests: finite-difference gradients, layers, BCE, Adam and
checkpoints.

Dependências / Dependencies:
- pytest
- numpy
"""

import numpy as np
import pytest

from numeric.checkpoint import load_checkpoint, save_checkpoint
from numeric.layers import (
    AttentionParams,
    LstmParams,
    bilstm_layer,
    lstm_cell,
    lstm_scan,
    multihead_attention,
    positional_encoding,
)
from numeric.losses import bce_loss
from numeric.optim import AdamState, adam_step, grad_check
from numeric.tensor import (
    Tape,
    Tensor,
    concat,
    gelu,
    layer_norm,
    matmul,
    mean,
    precision,
    sigmoid,
    softmax,
    stack,
    sum_all,
    tanh,
)
from utils.errors import DatasetError, NumericalError, ShapeError

GRAD_TOLERANCE = 1e-4
SEEDS = range(20)

# ---------------- Fixtures -------------------


def weighted(out: Tensor, seed: int = 99) -> Tensor:
    """Random linear functional so every output coordinate reaches the loss."""
    w = np.random.default_rng(seed).normal(size=out.shape)
    return sum_all(out * w)


def lstm_arrays(rng, d: int, hidden: int, prefix: str = "f") -> dict:
    return {
        f"{prefix}.w_ih": rng.normal(0, 0.5, (d, 4 * hidden)),
        f"{prefix}.w_hh": rng.normal(0, 0.5, (hidden, 4 * hidden)),
        f"{prefix}.b": rng.normal(0, 0.1, (4 * hidden,)),
    }


def attention_arrays(rng, d_model: int) -> dict:
    out = {}
    for k in ("q", "k", "v", "o"):
        out[f"w{k}"] = rng.normal(0, 0.4, (d_model, d_model))
        out[f"b{k}"] = rng.normal(0, 0.1, (d_model,))
    return out


def attention_params(t: dict) -> AttentionParams:
    return AttentionParams(*(t[k] for k in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")))


# ---------------- Testes -------------------


@pytest.mark.parametrize("seed", SEEDS)
def test_elementwise_primitives_pass_grad_check(seed):
    rng = np.random.default_rng(seed)
    params = {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(4,))}

    def f(t):
        x = t["a"] * t["b"] + t["b"] - t["a"]
        return weighted(concat([sigmoid(x), tanh(x), gelu(x)], axis=-1), seed)

    assert grad_check(f, params) <= GRAD_TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_matmul_softmax_layer_norm_pass_grad_check(seed):
    rng = np.random.default_rng(seed)
    params = {"x": rng.normal(size=(2, 3, 5)), "w": rng.normal(size=(5, 4))}

    def f(t):
        h = matmul(t["x"], t["w"])
        return weighted(stack([softmax(h, axis=-1), layer_norm(h)], axis=0), seed) + mean(h[..., 1:3])

    assert grad_check(f, params) <= GRAD_TOLERANCE


@pytest.mark.parametrize("seed", range(5))
def test_lstm_scan_passes_grad_check(seed):
    rng = np.random.default_rng(seed)
    params = {"x": rng.normal(size=(5, 4)), **lstm_arrays(rng, 4, 3)}

    def f(t):
        lstm = LstmParams(t["f.w_ih"], t["f.w_hh"], t["f.b"])
        return weighted(lstm_scan(t["x"], lstm), seed)

    assert grad_check(f, params) <= GRAD_TOLERANCE


@pytest.mark.parametrize("seed", range(5))
def test_attention_passes_grad_check(seed):
    rng = np.random.default_rng(seed)
    params = {"x": rng.normal(size=(4, 8)), **attention_arrays(rng, 8)}

    def f(t):
        return weighted(multihead_attention(t["x"], 2, attention_params(t)), seed)

    assert grad_check(f, params, max_checks_per_param=12, seed=seed) <= GRAD_TOLERANCE


def test_grad_check_on_quadratic_bowl_is_exact():
    params = {"x": np.array([1.0, -2.0, 0.5])}
    assert grad_check(lambda t: sum_all(t["x"] * t["x"]), params) <= 1e-8


@pytest.mark.parametrize("shapes", [((4,), (4, 3)), ((2, 4), (4,)), ((4,), (4,)), ((4,), (2, 4, 3))])
def test_matmul_accepts_vector_operands(shapes, rng):
    a, b = rng.normal(size=shapes[0]), rng.normal(size=shapes[1])
    with precision(np.float64):
        out = matmul(Tensor(a), Tensor(b))
    assert out.shape == np.shape(a @ b)
    assert np.allclose(out.data, a @ b)
    assert grad_check(lambda t: weighted(matmul(t["a"], t["b"])), {"a": a, "b": b}) <= GRAD_TOLERANCE


def test_lstm_scan_on_one_sequence_matches_the_batched_scan(rng):
    with precision(np.float64):
        arrays = lstm_arrays(rng, 4, 3)
        lstm = LstmParams(*(Tensor(arrays[k]) for k in ("f.w_ih", "f.w_hh", "f.b")))
        x = rng.normal(size=(6, 4))
        single = lstm_scan(x, lstm).data
        batched = lstm_scan(x[None], lstm).data
    assert single.shape == (6, 3)
    assert np.allclose(single, batched[0])


@pytest.mark.parametrize("seed", range(10))
def test_reverse_scan_of_a_palindrome_is_the_forward_scan_reversed(seed):
    rng = np.random.default_rng(seed)
    half = rng.normal(size=(4, 3))
    x = np.concatenate([half, half[::-1]])
    with precision(np.float64):
        arrays = lstm_arrays(rng, 3, 5)
        lstm = LstmParams(*(Tensor(arrays[k]) for k in ("f.w_ih", "f.w_hh", "f.b")))
        forward = lstm_scan(x, lstm).data
        backward = lstm_scan(x, lstm, reverse=True).data
    assert np.allclose(backward, forward[::-1], atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_attention_without_positions_is_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(6, 8))
    perm = rng.permutation(6)
    with precision(np.float64):
        t = {k: Tensor(v) for k, v in attention_arrays(rng, 8).items()}
        out = multihead_attention(x, 2, attention_params(t)).data
        permuted = multihead_attention(x[perm], 2, attention_params(t)).data
    assert np.allclose(permuted, out[perm], atol=1e-10)


def test_broadcast_mismatch_raises_shape_error():
    with pytest.raises(ShapeError):
        Tensor(np.ones((2, 3))) + Tensor(np.ones((4,)))
    with pytest.raises(ShapeError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_non_finite_forward_raises_numerical_error():
    with pytest.raises(NumericalError):
        Tensor(np.array([np.inf])) * 2.0


def test_nothing_is_recorded_outside_a_tape():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = sum_all(x * 2.0)
    assert len(tape) == 2
    z = sum_all(x * 2.0)
    assert len(tape) == 2
    assert z.item() == pytest.approx(y.item())


def test_softmax_rows_and_layer_norm_moments():
    with precision(np.float64):
        x = Tensor(np.random.default_rng(0).normal(size=(6, 9)) * 5)
        probs = softmax(x).data
        normed = layer_norm(x).data
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(np.abs(normed.mean(axis=1)) <= 1e-6)
    assert np.allclose(normed.var(axis=1), 1.0, atol=1e-4)


def test_softmax_is_shift_invariant():
    with precision(np.float64):
        x = np.random.default_rng(3).normal(size=(4, 7))
        assert np.allclose(softmax(Tensor(x)).data, softmax(Tensor(x + 12.5)).data, atol=1e-6)


def test_lstm_zero_weights_give_known_state():
    with precision(np.float64):
        params = LstmParams(Tensor(np.zeros((2, 12))), Tensor(np.zeros((3, 12))), Tensor(np.zeros(12)))
        h, c = lstm_cell(np.ones(2), np.zeros(3), np.zeros(3), params)
    # i = f = o = 0.5, g = 0 -> c = 0, h = 0
    assert np.allclose(c.data, 0.0)
    assert np.allclose(h.data, 0.0)


def test_bilstm_reverse_direction_reads_the_future(rng):
    with precision(np.float64):
        arrays = lstm_arrays(rng, 2, 3)
        forward = LstmParams(*(Tensor(arrays[k]) for k in ("f.w_ih", "f.w_hh", "f.b")))
        x = rng.normal(size=(5, 2))
        changed = x.copy()
        changed[-1] += 1.0
        a = bilstm_layer(x, forward, forward).data
        b = bilstm_layer(changed, forward, forward).data
    assert a.shape == (5, 6)
    assert np.allclose(a[0, :3], b[0, :3])
    assert not np.allclose(a[0, 3:], b[0, 3:])


def test_attention_weights_rows_sum_to_one(rng):
    with precision(np.float64):
        t = {k: Tensor(v) for k, v in attention_arrays(rng, 8).items()}
        _, weights = multihead_attention(rng.normal(size=(5, 8)), 2, attention_params(t), return_weights=True)
    assert weights.shape == (2, 5, 5)
    assert np.allclose(weights.data.sum(axis=-1), 1.0, atol=1e-6)


def test_positional_encoding_first_row():
    pe = positional_encoding(3, 4)
    assert pe[0].tolist() == [0.0, 1.0, 0.0, 1.0]


def test_bce_matches_scalar_loop(rng):
    probs = rng.uniform(0.01, 0.99, size=(5, 7))
    targets = np.eye(7)[rng.integers(0, 7, 5)]
    expected = 0.0
    for i in range(5):
        for j in range(7):
            p, y = probs[i, j], targets[i, j]
            expected += -(y * np.log(p) + (1 - y) * np.log(1 - p))
    expected /= probs.size
    with precision(np.float64):
        value = bce_loss(Tensor(probs), targets).item()
    assert abs(value - expected) <= 1e-9


def test_bce_is_near_zero_for_exact_predictions():
    targets = np.eye(7)[[0, 3, 6]]
    with precision(np.float64):
        assert bce_loss(Tensor(targets), targets).item() <= 1e-6


def test_bce_passes_grad_check(rng):
    targets = np.eye(7)[rng.integers(0, 7, 4)]
    params = {"logits": rng.normal(size=(4, 7))}
    assert grad_check(lambda t: bce_loss(softmax(t["logits"]), targets), params) <= GRAD_TOLERANCE


def test_adam_first_step_moves_by_learning_rate():
    p = {"w": Tensor(np.array([1.0, -1.0]), dtype=np.float64)}
    state = AdamState(lr=0.1)
    adam_step(p, {"w": np.array([2.0, -3.0])}, state)
    assert np.allclose(p["w"].data, [0.9, -0.9], atol=1e-6)
    assert state.step == 1


def test_adam_missing_gradient_counts_as_zero():
    p = {"w": Tensor(np.array([1.0]), dtype=np.float64)}
    adam_step(p, {}, AdamState())
    assert p["w"].data.tolist() == [1.0]


def test_adam_rejects_non_finite_gradients():
    p = {"w": Tensor(np.zeros(2))}
    with pytest.raises(NumericalError):
        adam_step(p, {"w": np.array([np.nan, 0.0])}, AdamState())


def test_adam_converges_on_quadratic():
    p = {"w": Tensor(np.array([3.0, -2.0]), requires_grad=True, dtype=np.float64)}
    state = AdamState(lr=0.05)
    for _ in range(1000):
        adam_step(p, {"w": 2.0 * p["w"].data}, state)
    assert np.all(np.abs(p["w"].data) < 0.05)


def test_checkpoint_round_trip(tmp_path, rng):
    params = {"b.w": rng.normal(size=(3, 2)), "a.b": rng.normal(size=(4,))}
    path = save_checkpoint(str(tmp_path / "model.json"), params, config={"variant": "full"})
    loaded, header = load_checkpoint(path)
    assert [e["name"] for e in header["params"]] == ["a.b", "b.w"]
    assert header["config"] == {"variant": "full"}
    for name, arr in params.items():
        assert np.array_equal(loaded[name], arr.astype(np.float32))


def test_checkpoint_rejects_truncated_blob(tmp_path):
    path = save_checkpoint(str(tmp_path / "m.json"), {"w": np.ones((4, 4))})
    with open(str(tmp_path / "m.bin"), "r+b") as f:
        f.truncate(10)
    with pytest.raises(DatasetError):
        load_checkpoint(path)
