"""
완전연결 신경망 / Adam / Polyak 테스트
"""
import numpy as np
import pytest

from src.agents.nn import (
    AdamConfig,
    AdamMoments,
    MlpParams,
    adam_step,
    adam_update,
    backward,
    forward,
    polyak_update,
    xavier_init
)
from src.utils.exceptions import CacheError, CheckpointError, ShapeError


def _tiny_net():
    """1→1→1, θ_1=2, b_1=1, θ_2=3, b_2=0"""
    return MlpParams(
        weights=[np.array([[2.0]]), np.array([[3.0]])],
        biases=[np.array([1.0]), np.array([0.0])],
        activations=["relu"],
    )


def test_forward_arithmetic():
    """hidden = ReLU(7) = 7, out = 21"""
    out, _ = forward(_tiny_net(), np.array([3.0]))
    assert out[0] == pytest.approx(21.0)


def test_dead_relu():
    """모든 pre-activation 음수 → 출력 = b_K"""
    net = _tiny_net()
    net.biases[1][:] = 0.5
    out, _ = forward(net, np.array([-10.0]))
    assert out[0] == pytest.approx(0.5)


def test_zero_weights():
    """가중치 0 → 출력 = 마지막 편향"""
    net = xavier_init([4, 5, 2], np.random.default_rng(0))
    for w in net.weights:
        w[:] = 0.0
    net.biases[-1][:] = [0.3, -0.7]
    out, _ = forward(net, np.random.default_rng(1).normal(size=(6, 4)))
    np.testing.assert_allclose(out, np.tile([0.3, -0.7], (6, 1)))


def test_linear_gradient_closed_form():
    """선형 1층, 제곱 손실 → 2(θx+b−y)·(x, 1)"""
    net = MlpParams([np.array([[1.5]])], [np.array([0.2])], [])
    x, y = 2.0, 1.0
    out, cache = forward(net, np.array([x]))
    grads = backward(net, cache, 2.0 * (out - y))
    residual = 1.5 * x + 0.2 - y
    assert grads.weights[0][0, 0] == pytest.approx(2 * residual * x)
    assert grads.biases[0][0] == pytest.approx(2 * residual)


ARCHITECTURES = [
    [4, 6, 5, 2],
    [12, 32, 4],
    [12, 64, 64, 4],
    [3, 8, 8, 8, 3],
    [12, 256, 256, 4],
]


def _relative_error(analytic, numeric, floor=1e-4):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _same_pattern(net, x, base):
    """ReLU 활성 패턴이 그대로인지 (꺾임을 넘는 차분은 제외)"""
    _, cache = forward(net, x)
    return all(np.array_equal(a > 0, b > 0) for a, b in zip(cache.pre_activations, base))


@pytest.mark.parametrize("dims", ARCHITECTURES, ids=lambda d: "x".join(map(str, d)))
@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_backward_matches_finite_differences(dims, activation):
    """아키텍처 × 활성화마다 무작위 네트워크 10개, 해석적 기울기 vs 중앙 차분 상대오차 < 1e-4"""
    rng = np.random.default_rng(len(dims) * 1000 + dims[1] + (0 if activation == "relu" else 7))
    h = 1e-6
    samples_per_param = 25
    for trial in range(10):
        head = "tanh" if trial % 2 else "linear"
        net = xavier_init(dims, rng, [activation] * (len(dims) - 2), head=head, head_scale=0.5)
        for b in net.biases:
            b[:] = rng.normal(0.0, 0.1, size=b.shape)
        x = rng.normal(size=(2, dims[0]))
        upstream = rng.normal(size=(2, dims[-1]))

        _, cache = forward(net, x)
        grads = backward(net, cache, upstream)
        base = [z.copy() for z in cache.pre_activations]

        def loss():
            return float(np.sum(forward(net, x)[0] * upstream))

        def central(array, idx):
            saved = array[idx]
            array[idx] = saved + h
            up, up_ok = loss(), _same_pattern(net, x, base)
            array[idx] = saved - h
            down, down_ok = loss(), _same_pattern(net, x, base)
            array[idx] = saved
            if activation == "relu" and not (up_ok and down_ok):
                return None
            return (up - down) / (2 * h)

        worst = 0.0
        for param, grad in zip(net.parameters(), grads.as_list()):
            flat = list(np.ndindex(param.shape))
            picks = rng.choice(len(flat), size=min(samples_per_param, len(flat)), replace=False)
            for pick in picks:
                fd = central(param, flat[pick])
                if fd is not None:
                    worst = max(worst, _relative_error(grad[flat[pick]], fd))

        for idx in np.ndindex(x.shape):
            fd = central(x, idx)
            if fd is not None:
                worst = max(worst, _relative_error(grads.input[idx], fd))

        assert worst < 1e-4, f"{dims} {activation} {head}: 최대 상대오차 {worst:.2e}"


def test_zero_out_grad():
    net = xavier_init([3, 4, 2], np.random.default_rng(0))
    _, cache = forward(net, np.ones(3))
    grads = backward(net, cache, np.zeros(2))
    for g in grads.as_list():
        assert np.all(g == 0.0)


def test_stale_cache():
    """갱신 후 이전 캐시 → CacheError, 다른 네트워크 캐시도 오류"""
    rng = np.random.default_rng(0)
    net = xavier_init([3, 4, 2], rng)
    _, cache = forward(net, np.ones(3))
    grads = backward(net, cache, np.ones(2))
    adam_step(net, grads, AdamConfig(lr=1e-3))
    with pytest.raises(CacheError):
        backward(net, cache, np.ones(2))

    other = net.copy()
    _, cache = forward(net, np.ones(3))
    with pytest.raises(CacheError):
        backward(other, cache, np.ones(2))


def test_input_shape_error():
    net = xavier_init([3, 4, 2], np.random.default_rng(0))
    with pytest.raises(ShapeError):
        forward(net, np.ones(5))


def test_adam_first_step():
    """첫 step: Δ = −lr·g/(|g| + eps) (편향 보정 후)"""
    cfg = AdamConfig(lr=0.01)
    param = np.array([1.0, -2.0])
    grad = np.array([0.5, -3.0])
    moments = AdamMoments.zeros_like([param])
    adam_update([param], [grad], moments, cfg)
    expected = np.array([1.0, -2.0]) - 0.01 * grad / (np.abs(grad) + cfg.eps)
    np.testing.assert_allclose(param, expected)


def test_adam_zero_gradient():
    cfg = AdamConfig(lr=0.01)
    param = np.array([1.0, -2.0])
    moments = AdamMoments.zeros_like([param])
    for _ in range(5):
        adam_update([param], [np.zeros(2)], moments, cfg)
    np.testing.assert_allclose(param, [1.0, -2.0])


def test_adam_constant_gradient_limit():
    """상수 기울기 → step 당 이동량 ≈ lr"""
    cfg = AdamConfig(lr=0.01)
    param = np.array([0.0])
    moments = AdamMoments.zeros_like([param])
    for _ in range(200):
        before = param.copy()
        adam_update([param], [np.array([2.0])], moments, cfg)
    assert before[0] - param[0] == pytest.approx(0.01, rel=0.01)


def test_xavier_bounds_and_determinism():
    dims = [10, 20, 3]
    net_a = xavier_init(dims, np.random.default_rng(7))
    net_b = xavier_init(dims, np.random.default_rng(7))
    for (w_a, w_b), (d_in, d_out) in zip(zip(net_a.weights, net_b.weights), zip(dims[:-1], dims[1:])):
        np.testing.assert_array_equal(w_a, w_b)
        assert np.max(np.abs(w_a)) <= np.sqrt(6.0 / (d_in + d_out))
    for b in net_a.biases:
        assert np.all(b == 0.0)


def test_polyak_examples():
    """τ = 1 → online, τ = 0.001 → 0.001, τ = 0 → 불변"""
    rng = np.random.default_rng(0)
    online = xavier_init([2, 3, 1], rng)
    for p in online.parameters():
        p[...] = 1.0
    target = online.copy()
    for p in target.parameters():
        p[...] = 0.0

    polyak_update(target, online, 0.0)
    assert all(np.all(p == 0.0) for p in target.parameters())
    polyak_update(target, online, 0.001)
    for p in target.parameters():
        np.testing.assert_allclose(p, 0.001)
    polyak_update(target, online, 1.0)
    for p in target.parameters():
        np.testing.assert_allclose(p, 1.0)

    with pytest.raises(ShapeError):
        polyak_update(xavier_init([2, 4, 1], rng), online, 0.5)


@pytest.mark.parametrize("tau", [0.001, 0.05, 0.5])
def test_polyak_gap_contracts(tau):
    """고정된 online 에 대해 ‖target − online‖∞ 가 step 마다 정확히 (1 − τ) 배"""
    rng = np.random.default_rng(8)
    online = xavier_init([5, 7, 3], rng)
    target = xavier_init([5, 7, 3], rng)

    def gap():
        return max(np.max(np.abs(t - o)) for t, o in zip(target.parameters(), online.parameters()))

    previous = gap()
    for _ in range(50):
        polyak_update(target, online, tau)
        current = gap()
        assert current == pytest.approx((1.0 - tau) * previous, rel=1e-9)
        previous = current


def test_checkpoint_round_trip():
    """to_dict / from_dict 후 같은 출력, 손상된 데이터는 CheckpointError"""
    rng = np.random.default_rng(3)
    net = xavier_init([4, 8, 2], rng, head="tanh", head_scale=0.5)
    x = rng.normal(size=(5, 4))
    _, cache = forward(net, x)
    adam_step(net, backward(net, cache, np.ones((5, 2))), AdamConfig(lr=1e-3))

    restored = MlpParams.from_dict(net.to_dict())
    np.testing.assert_array_equal(forward(restored, x)[0], forward(net, x)[0])
    assert restored.adam.step == 1

    broken = net.to_dict()
    del broken["parameters"]
    with pytest.raises(CheckpointError):
        MlpParams.from_dict(broken)


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("🧠 신경망 테스트")
    print("=" * 60)
    pytest.main([__file__, "-v"])
