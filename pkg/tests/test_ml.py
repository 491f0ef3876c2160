import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from witness_bounds.dataset import DatasetConfig, generate_dataset, split_dataset
from witness_bounds.errors import SchemaMismatch, ShapeMismatch
from witness_bounds.ml.network import (
    N_PARAMS,
    PARAM_SHAPES,
    CoherenceNetParams,
    backward,
    dropout_masks,
    forward,
    gelu,
    gelu_grad,
    init_params,
    leaky_relu,
    loss_and_grad,
    loss_value,
    silu,
    silu_grad,
)
from witness_bounds.ml.optim import AdamState, adam_step, cosine_lr
from witness_bounds.ml.training import (
    TrainConfig,
    classification_metrics,
    evaluate,
    fit_one,
    load_checkpoint,
    regression_metrics,
    save_checkpoint,
    train,
)


def relative_fd_error(kind, seed=0, n=6, per_group=6, h=1e-6):
    """Worst relative error between analytic and central-difference gradients, per parameter group."""
    rng = np.random.default_rng(seed)
    params = init_params(rng, classification=(kind == "bce"))
    x = rng.normal(size=(n, 33))
    y = rng.integers(0, 2, n).astype(float) if kind == "bce" else rng.normal(size=n)
    masks = dropout_masks(n, rng)
    _, grads = loss_and_grad(params, x, y, kind, masks)
    worst = {}
    for name, shape in PARAM_SHAPES.items():
        idx = [tuple(rng.integers(0, s) for s in shape) for _ in range(per_group)]
        num, ana = [], []
        for i in idx:
            p = params.copy()
            p.tensors[name][i] += h
            up = loss_and_grad(p, x, y, kind, masks)[0]
            p.tensors[name][i] -= 2 * h
            down = loss_and_grad(p, x, y, kind, masks)[0]
            num.append((up - down) / (2 * h))
            ana.append(grads[name][i])
        num, ana = np.array(num), np.array(ana)
        worst[name] = float(np.linalg.norm(num - ana) / max(np.linalg.norm(num) + np.linalg.norm(ana), 1e-12))
    return worst


@pytest.fixture(scope="module")
def split():
    samples = generate_dataset(DatasetConfig(n_samples=60, seed=11))
    return split_dataset(samples, seed=3, require_count=None)


def test_parameter_count():
    assert N_PARAMS == 48513
    p = init_params(np.random.default_rng(0))
    assert p.n_params == 48513
    assert np.array_equal(CoherenceNetParams.from_flat(p.flat()).flat(), p.flat())
    with pytest.raises(ShapeMismatch):
        CoherenceNetParams.from_flat(np.zeros(10))


def test_init_ranges():
    p = init_params(np.random.default_rng(0))
    assert np.abs(p["fc1.W"]).max() <= 1 / math.sqrt(33)
    assert np.abs(p["res1.W"]).max() <= 1 / math.sqrt(128)
    assert np.all(p["ln.gamma"] == 1) and np.all(p["ln.beta"] == 0)


@pytest.mark.parametrize("kind", ["mse", "mae", "bce"])
def test_gradients_match_finite_differences(kind):
    worst = relative_fd_error(kind)
    assert max(worst.values()) < 1e-6, worst


@pytest.mark.parametrize("f,df", [(gelu, gelu_grad), (silu, silu_grad)])
def test_activation_derivatives(f, df):
    x = np.linspace(-4, 4, 41)
    h = 1e-6
    assert np.allclose(df(x), (f(x + h) - f(x - h)) / (2 * h), atol=1e-8)


def test_activation_values():
    assert gelu(np.array([0.0]))[0] == 0.0
    assert gelu(np.array([1.0]))[0] == pytest.approx(0.8413447460685429)
    assert leaky_relu(np.array([-2.0]))[0] == pytest.approx(-0.02)


def test_forward_modes():
    rng = np.random.default_rng(1)
    p = init_params(rng)
    x = rng.normal(size=(5, 33))
    a, _ = forward(p, x)
    b, _ = forward(p, x)
    assert np.array_equal(a, b)
    single, _ = forward(p, x[0])
    assert single == pytest.approx(a[0])
    t1, _ = forward(p, x, mode="train", rng=np.random.default_rng(2))
    assert not np.allclose(t1, a)
    with pytest.raises(ShapeMismatch):
        forward(p, np.zeros((2, 30)))
    with pytest.raises(ValueError):
        forward(p, x, mode="train")
    pc = init_params(rng, classification=True)
    out, _ = forward(pc, x)
    assert np.all((out > 0) & (out < 1))


def test_dropout_masks_are_inverted():
    m1, m2 = dropout_masks(4000, np.random.default_rng(0))
    assert set(np.unique(m1)) <= {0.0, 1 / 0.7}
    assert m1.mean() == pytest.approx(1.0, abs=0.01)
    assert (m2 == 0).mean() == pytest.approx(0.3, abs=0.01)


def test_losses():
    assert loss_value("mae", [1, 2], [0, 0]) == 1.5
    assert loss_value("mse", [1, 2], [0, 0]) == 2.5
    assert loss_value("bce", [0.5], [1]) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        loss_value("huber", [0], [0])


def test_backward_rejects_wrong_batch():
    p = init_params(np.random.default_rng(0))
    _, cache = forward(p, np.zeros((3, 33)))
    with pytest.raises(ShapeMismatch):
        backward(p, cache, np.zeros(2))


# -- optimiser ---------------------------------------------------------------

def test_adam_first_step_hand_computed():
    p = init_params(np.random.default_rng(0))
    before = p.copy()
    grads = {k: np.full(v.shape, 0.5) for k, v in p.tensors.items()}
    adam_step(p, grads, AdamState(), lr=0.1)
    # bias-corrected first step is lr * g / (|g| + eps)
    step = 0.1 * 0.5 / (0.5 + 1e-8)
    for k in p.tensors:
        assert np.allclose(before[k] - p[k], step)


def test_adam_matches_torch():
    torch = pytest.importorskip("torch")
    rng = np.random.default_rng(0)
    p = init_params(rng)
    tp = [torch.tensor(v.copy(), requires_grad=True) for v in p.tensors.values()]
    opt = torch.optim.Adam(tp, lr=1e-2, weight_decay=1e-3)
    state = AdamState()
    for _ in range(5):
        grads = {k: rng.normal(size=v.shape) for k, v in p.tensors.items()}
        for t, g in zip(tp, grads.values()):
            t.grad = torch.tensor(g)
        opt.step()
        adam_step(p, grads, state, lr=1e-2, weight_decay=1e-3)
    for t, v in zip(tp, p.tensors.values()):
        assert np.allclose(t.detach().numpy(), v, atol=1e-12)


def test_forward_matches_torch():
    torch = pytest.importorskip("torch")
    nn = torch.nn
    rng = np.random.default_rng(4)
    p = init_params(rng)
    x = rng.normal(size=(7, 33))

    def lin(name):
        layer = nn.Linear(*p[f"{name}.W"].shape).double()
        layer.weight.data = torch.tensor(p[f"{name}.W"].T.copy())
        layer.bias.data = torch.tensor(p[f"{name}.b"].copy())
        return layer

    ln = nn.LayerNorm(128, eps=1e-5).double()
    xt = torch.tensor(x)
    h = ln(nn.functional.gelu(lin("fc1")(xt)))
    h = h + lin("res2")(nn.functional.leaky_relu(lin("res1")(h), 0.01))
    h = nn.functional.leaky_relu(lin("fc2")(h), 0.01)
    h = nn.functional.silu(lin("fc3")(h))
    h = nn.functional.leaky_relu(lin("head1")(h), 0.01)
    ref = lin("head2")(h)[:, 0].detach().numpy()
    assert np.allclose(forward(p, x)[0], ref, atol=1e-12)


def test_cosine_schedule():
    assert cosine_lr(0, 1e-3) == pytest.approx(1e-3)
    assert cosine_lr(50, 1e-3) == pytest.approx(5e-4)
    assert cosine_lr(100, 1e-3) == pytest.approx(0.0, abs=1e-18)
    assert cosine_lr(100, 1e-3, eta_min=1e-5) == pytest.approx(1e-5)


@given(st.integers(0, 99), st.floats(1e-5, 1.0))
def test_cosine_monotone(epoch, lr):
    assert cosine_lr(epoch + 1, lr) <= cosine_lr(epoch, lr) + 1e-18


# -- training loop -----------------------------------------------------------

def _xy(split, cfg):
    from witness_bounds.dataset import feature_matrix, fit_standardizer
    from witness_bounds.ml.training import targets

    std = fit_standardizer(split.train)
    return (std.apply(feature_matrix(split.train)), targets(split.train, cfg),
            std.apply(feature_matrix(split.validation)), targets(split.validation, cfg))


def test_early_stopping_patience(split):
    cfg = TrainConfig(max_epochs=100, patience=5)
    x, y, xv, yv = _xy(split, cfg)
    init = init_params(np.random.default_rng(0))
    # validation improves until epoch 10, then gets worse
    params, rec = fit_one(x, y, xv, yv, 1e-3, 0.0, cfg, init, np.random.default_rng(1),
                          val_fn=lambda p, e: abs(e - 10) + 1.0)
    assert rec.best_epoch == 10
    assert rec.epochs_run == 16
    assert rec.val_metric == 1.0
    assert len(rec.history) == 16


def test_best_epoch_weights_are_returned(split):
    cfg = TrainConfig(max_epochs=8, patience=30)
    x, y, xv, yv = _xy(split, cfg)
    init = init_params(np.random.default_rng(0))
    seen = {}

    def val(p, e):
        seen[e] = p.flat().copy()
        return 0.0 if e == 3 else 1.0

    params, rec = fit_one(x, y, xv, yv, 1e-3, 0.0, cfg, init, np.random.default_rng(1), val_fn=val)
    assert rec.best_epoch == 3
    assert np.array_equal(params.flat(), seen[3])
    assert not np.array_equal(init.flat(), seen[0])  # init itself is untouched
    assert np.array_equal(init.flat(), init_params(np.random.default_rng(0)).flat())


def test_grid_search_and_determinism(split):
    cfg = TrainConfig(task="regression", target="c_g", max_epochs=6, seed=9)
    a = train(split, cfg)
    b = train(split, cfg)
    assert len(a.runs) == 4
    assert a.val_metric == min(r.val_metric for r in a.runs)
    assert (a.lr, a.weight_decay) in [(r.lr, r.weight_decay) for r in a.runs]
    assert np.array_equal(a.params.flat(), b.params.flat())


def test_training_reduces_loss(split):
    cfg = TrainConfig(task="regression", target="c_ref", lr_grid=(1e-3,), wd_grid=(0.0,),
                      max_epochs=200, t_max=200, patience=200)
    x, y, xv, yv = _xy(split, cfg)
    _, rec = fit_one(x, y, xv, yv, 1e-3, 0.0, cfg, init_params(np.random.default_rng(0)),
                     np.random.default_rng(1), val_fn=lambda p, e: loss_value("mse", forward(p, x)[0], y))
    first, best = rec.history[0][3], rec.val_metric
    assert best < 0.1 * first


def test_config_validation():
    assert TrainConfig(target="c_l1").loss == "mae"
    assert TrainConfig(target="c_g").loss == "mse"
    assert TrainConfig(task="classification").loss == "bce"
    with pytest.raises(ValueError):
        TrainConfig(task="ranking")
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"task": "regression", "epochs": 3})
    assert TrainConfig.from_dict(TrainConfig().to_dict()) == TrainConfig()


def test_metrics():
    m = classification_metrics([0.9, 0.2, 0.6, 0.4], [1, 0, 0, 1])
    assert (m["tp"], m["tn"], m["fp"], m["fn"]) == (1, 1, 1, 1)
    assert m["accuracy"] == 0.5
    r = regression_metrics([1.0, 3.0], [0.0, 0.0])
    assert r["mae"] == 2.0 and r["mse"] == 5.0


def test_checkpoint_roundtrip(split, tmp_path):
    ckpt = train(split, TrainConfig(task="classification", target="c_g", max_epochs=3))
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_checkpoint(p1, ckpt, {"note": 1})
    save_checkpoint(p2, ckpt, {"note": 1})
    assert p1.read_bytes() == p2.read_bytes()
    loaded = load_checkpoint(p1)
    assert np.array_equal(loaded.params.flat(), ckpt.params.flat())
    assert loaded.params.classification
    assert evaluate(loaded, split.test) == evaluate(ckpt, split.test)
    text = p1.read_text().replace('"version": 1', '"version": 2')
    p1.write_text(text)
    with pytest.raises(SchemaMismatch):
        load_checkpoint(p1)
