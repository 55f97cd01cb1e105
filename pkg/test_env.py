"""
변동성 피팅 환경 / 상태 정규화 테스트
"""
import numpy as np
import pytest

from src.calculator.volmodel import MoneynessGrid
from src.market.env import EnvState, StateNormalizer, VolFittingEnv, normalize, pack_state, unpack_quotes
from src.market.simulator import MarketConfig, gen_static
from src.utils.exceptions import LifecycleError, ShapeError

GRID = MoneynessGrid((-0.2, 0.0, 0.2))
FLAT = [[-1.0, 0.2], [1.0, 0.2]]


def _flat_market(kind="static", episode_length=50):
    return MarketConfig(kind=kind, shape="custom", custom_table=FLAT, grid=GRID, episode_length=episode_length)


def test_reset_static():
    """s_0 = 고정 슬라이스 ⊕ flat θ"""
    market = MarketConfig(kind="static", shape="skew", grid=GRID)
    env = VolFittingEnv(market)
    state = env.reset()
    quotes = gen_static(market)
    assert state.dim == env.state_dim == 2 * 3 + 3
    np.testing.assert_allclose(state.theta(), [0.2, 0.0, 0.0])
    np.testing.assert_allclose(unpack_quotes(state).bid, quotes.bid)
    np.testing.assert_allclose(unpack_quotes(state).ask, quotes.ask)


def test_reset_quasi_dynamic_determinism():
    """같은 시드 → 같은 s_0"""
    market = MarketConfig(kind="quasi_dynamic")
    s_a = VolFittingEnv(market, seed=9).reset()
    s_b = VolFittingEnv(market, seed=9).reset()
    np.testing.assert_array_equal(s_a.vector, s_b.vector)


def test_static_flat_step():
    """flat 시장, Δθ = 0 → r = 0, 1 step 후 종료"""
    env = VolFittingEnv(_flat_market())
    env.reset()
    result = env.step(np.zeros(3))
    assert result.reward == pytest.approx(0.0, abs=1e-20)
    assert result.done
    with pytest.raises(LifecycleError):
        env.step(np.zeros(3))


def test_sequential_done_at_episode_length():
    """sequential M=50 → 정확히 50 step 에서 종료"""
    env = VolFittingEnv(_flat_market("sequential", 50))
    env.reset()
    dones = [env.step(np.zeros(3)).done for _ in range(50)]
    assert dones[-1]
    assert not any(dones[:-1])


def test_quasi_dynamic_terminal_state_keeps_quotes():
    """quasi-dynamic: 중간 step 은 새 호가, 종료 step 의 다음 상태는 결정에 쓴 호가 그대로"""
    market = MarketConfig(kind="quasi_dynamic", grid=GRID, episode_length=3)
    env = VolFittingEnv(market, seed=4)
    env.reset()
    for _ in range(3):
        result = env.step(np.zeros(3))
        next_bid = unpack_quotes(result.state).bid
        if result.done:
            np.testing.assert_array_equal(next_bid, result.info["quotes"].bid)
        else:
            assert not np.array_equal(next_bid, result.info["quotes"].bid)
    assert result.done


def test_step_reward_and_theta():
    """보상은 새 θ 로 다시 계산한 값과 같고, 행동은 a_max 로 잘림"""
    env = VolFittingEnv(_flat_market("sequential", 5), action_bound=0.5)
    env.reset()
    result = env.step([0.01, 0.0, 0.0])
    assert result.reward == pytest.approx(-3e-4)
    np.testing.assert_allclose(result.state.theta(), [0.21, 0.0, 0.0])

    result = env.step([5.0, -5.0, 0.0])
    np.testing.assert_allclose(result.info["action"], [0.5, -0.5, 0.0])
    np.testing.assert_allclose(env.theta, [0.71, -0.5, 0.0])


def test_counterfactual_reward_does_not_advance():
    """r^D 계산은 환경을 진행시키지 않음"""
    env = VolFittingEnv(_flat_market("sequential", 5))
    env.reset()
    r_d = env.counterfactual_reward([0.01, 0.0, 0.0])
    assert r_d == pytest.approx(-3e-4)
    assert env.step_count == 0
    np.testing.assert_allclose(env.theta, [0.2, 0.0, 0.0])


def test_action_shape_error():
    env = VolFittingEnv(_flat_market())
    env.reset()
    with pytest.raises(ShapeError):
        env.step(np.zeros(2))


def test_normalizer_examples():
    """첫 상태 → 0, 관측 0 과 2 → normalize(2) = 1"""
    norm = StateNormalizer(1)
    assert norm.normalize(np.array([5.0]), learning=True)[0] == pytest.approx(0.0)

    norm = StateNormalizer(1)
    norm.update(np.array([0.0]))
    norm.update(np.array([2.0]))
    assert norm.mean[0] == pytest.approx(1.0)
    assert norm.std[0] == pytest.approx(1.0)
    assert norm.normalize(np.array([2.0]))[0] == pytest.approx(1.0)


def test_normalizer_constant_coordinate():
    """상수 좌표는 항상 0"""
    norm = StateNormalizer(2)
    for i in range(20):
        out = norm.normalize(np.array([3.0, float(i)]), learning=True)
        assert out[0] == pytest.approx(0.0)


def test_normalizer_frozen_when_not_learning():
    """learning=False 면 통계 불변"""
    norm = StateNormalizer(2)
    norm.update(np.array([1.0, 2.0]))
    state = EnvState(np.array([4.0, 8.0]), 0)
    normalize(norm, state, learning=False)
    assert norm.count == 1
    np.testing.assert_allclose(norm.mean, [1.0, 2.0])


def test_normalizer_state_dict():
    norm = StateNormalizer(3)
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(10, 3)):
        norm.update(x)
    restored = StateNormalizer.from_state_dict(norm.state_dict())
    x = rng.normal(size=3)
    np.testing.assert_allclose(restored.transform(x), norm.transform(x))


def test_pack_state_layout():
    """(bid_j, ask_j) 교차 배치 후 θ"""
    quotes = gen_static(MarketConfig(shape="skew", grid=GRID, spread=0.01))
    state = pack_state(quotes, np.array([0.1, 0.2, 0.3]), 4)
    np.testing.assert_allclose(state.vector[:2], [quotes.bid[0], quotes.ask[0]])
    np.testing.assert_allclose(state.vector[-3:], [0.1, 0.2, 0.3])
    assert state.step == 4


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("🧭 변동성 피팅 환경 테스트")
    print("=" * 60)
    pytest.main([__file__, "-v"])
