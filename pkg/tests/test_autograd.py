import numpy as np
import pytest

from cste.gnnet import autograd as ag
from cste.gnnet.autograd import Tensor


def numeric_grad(f, x, step=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += step
        xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2 * step)
    return g


def _square(t):
    return t * t


CASES = {
    "matmul_bias": lambda t, w: ((t @ w) + Tensor(np.ones((1, 3)))).sum(),
    "rmatmul": lambda t, w: (w.data.T @ t.T).sum(),
    "div_mul": lambda t, w: (t * t / (1.0 + t * t)).sum(),
    "rsub_rdiv": lambda t, w: ((2.0 - t) + 1.0 / (3.0 + t * t)).sum(),
    "softmax_log": lambda t, w: ag.log(ag.softmax(t @ w, axis=1))[np.arange(4), np.array([0, 1, 2, 1])].sum(),
    "leaky_relu_exp": lambda t, w: ag.exp(ag.leaky_relu(t, 0.2)).sum(),
    "concat_index": lambda t, w: (ag.concat([t, t[np.array([3, 3, 0, 1])]], axis=1) * 1.5).sum(),
    "segment_sum": lambda t, w: _square(ag.segment_sum(t, np.array([0, 2, 2, 0]), 3)).sum(),
    "segment_softmax": lambda t, w: (ag.segment_softmax(t[:, :1], np.array([1, 0, 1, 1]), 2) * t[:, 1:2]).sum(),
    "transpose_mean": lambda t, w: (t.T @ t).sum(axis=0, keepdims=True).sum() / 7.0,
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_gradients_match_finite_differences(name):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 2)) + 0.05  # away from the ReLU kink
    w = Tensor(rng.standard_normal((2, 3)))
    f = CASES[name]
    t = Tensor(x)
    f(t, w).backward()
    num = numeric_grad(lambda a: float(f(Tensor(a), w).data), x)
    assert np.allclose(t.grad, num, atol=1e-7, rtol=1e-6)


def test_segment_softmax_sums_per_segment():
    rng = np.random.default_rng(1)
    seg = np.array([0, 0, 1, 2, 2, 2])
    out = ag.segment_softmax(Tensor(rng.standard_normal((6, 1)) * 50), seg, 4).data[:, 0]
    assert np.allclose(np.bincount(seg, weights=out, minlength=4), [1, 1, 1, 0])


def test_shared_subexpression_accumulates():
    x = Tensor(np.array([[2.0]]))
    y = x * x + x
    (y * y).sum().backward()
    # d/dx (x^2 + x)^2 = 2 (x^2 + x)(2x + 1)
    assert x.grad[0, 0] == pytest.approx(2 * 6 * 5)


def test_clamp_min_blocks_gradient_below_floor():
    x = Tensor(np.array([[1e-20, 0.5]]))
    ag.log(ag.clamp_min(x, 1e-12)).sum().backward()
    assert x.grad[0, 0] == 0.0 and x.grad[0, 1] == pytest.approx(2.0)


def test_ndarray_on_the_left():
    x = Tensor(np.eye(2))
    out = np.array([[1.0, 2.0]]) @ x
    assert isinstance(out, Tensor) and np.array_equal(out.data, [[1.0, 2.0]])
