"""
벤치마크 최적화기 / 격자 오라클 테스트
"""
import numpy as np
import pytest

from src.calculator.bench import ORACLE_BOUNDS, benchmark_fit, grid_oracle, restart_points
from src.calculator.rewards import fit_error
from src.calculator.volmodel import MoneynessGrid, ParamForm, eval_slice
from src.market.simulator import MarketConfig, QuoteSlice, gen_static

GRID = MoneynessGrid.default()


def _quotes_from_mids(mids, spread=0.01):
    mids = np.asarray(mids, dtype=np.float64)
    return QuoteSlice(0, mids - 0.5 * spread, mids + 0.5 * spread)


def test_flat_market():
    """flat 0.2 → θ* = (0.2, 0, 0), reward ≈ 0"""
    result = benchmark_fit(_quotes_from_mids(np.full(GRID.size, 0.2)), GRID)
    np.testing.assert_allclose(result.theta, [0.2, 0.0, 0.0], atol=1e-6)
    assert result.reward == pytest.approx(0.0, abs=1e-10)
    assert result.restarts == 8
    assert result.evaluations > 0


def test_inverse_crime_recovery():
    """모델로 만든 mid 를 다시 피팅하면 θ_true 복원"""
    theta_true = np.array([0.22, -0.05, 0.3])
    quotes = _quotes_from_mids(eval_slice(theta_true, GRID))
    result = benchmark_fit(quotes, GRID, "mse", "quadratic")
    np.testing.assert_allclose(result.theta, theta_true, atol=1e-6)


def test_svi_flat_market():
    """svi_reduced 도 flat 시장을 거의 완전히 맞춤"""
    result = benchmark_fit(_quotes_from_mids(np.full(GRID.size, 0.2)), GRID, "mse", "svi_reduced")
    assert result.reward == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("shape", ["skew", "high_smile", "inverse_smile"])
@pytest.mark.parametrize("kind", ["mse", "bmse"])
def test_benchmark_dominates_grid_oracle(shape, kind):
    """프리셋 시장에서 벤치마크 ≥ 50³ 격자 최선 − 1e-6"""
    quotes = gen_static(MarketConfig(shape=shape))
    result = benchmark_fit(quotes, GRID, kind)
    grid_best, _ = grid_oracle(quotes, GRID, kind, resolution=50)
    assert result.reward <= 0.0
    assert grid_best <= 0.0
    assert result.reward >= grid_best - 1e-6


def test_benchmark_beats_random_search():
    """균등 무작위 θ 10⁴ 개보다 좋거나 같음"""
    quotes = gen_static(MarketConfig(shape="high_smile"))
    result = benchmark_fit(quotes, GRID)
    rng = np.random.default_rng(0)
    lows, highs = zip(*ORACLE_BOUNDS[ParamForm.QUADRATIC])
    thetas = rng.uniform(lows, highs, size=(10_000, 3))
    assert result.reward >= -np.min(fit_error(thetas, quotes, GRID))


def test_grid_refinement_is_monotone():
    """격자를 세분하면 (포함 관계일 때) 최선값이 나빠지지 않음"""
    quotes = gen_static(MarketConfig(shape="skew"))
    coarse, _ = grid_oracle(quotes, GRID, resolution=11)
    fine, _ = grid_oracle(quotes, GRID, resolution=21)
    assert fine >= coarse


def test_skew_grid_close_to_benchmark():
    """최적점 주변 상자 50³ 격자는 벤치마크와 1e-4 이내"""
    quotes = gen_static(MarketConfig(shape="skew"))
    result = benchmark_fit(quotes, GRID)
    bounds = ((0.15, 0.3), (-0.5, 0.0), (0.0, 0.5))
    grid_best, _ = grid_oracle(quotes, GRID, resolution=50, bounds=bounds)
    assert abs(result.reward - grid_best) < 1e-4


def test_benchmark_is_deterministic():
    quotes = gen_static(MarketConfig(shape="inverse_smile"))
    first = benchmark_fit(quotes, GRID, "smse")
    second = benchmark_fit(quotes, GRID, "smse")
    np.testing.assert_array_equal(first.theta, second.theta)
    assert first.reward == second.reward
    assert first.evaluations == second.evaluations


def test_restart_points_fixed():
    points = restart_points(GRID, "quadratic")
    assert len(points) == 8
    np.testing.assert_allclose(np.mean(points, axis=0), [0.2, 0.0, 0.0])


def test_grid_oracle_resolution():
    quotes = gen_static(MarketConfig(shape="skew"))
    with pytest.raises(ValueError):
        grid_oracle(quotes, GRID, resolution=9)


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("📏 벤치마크 최적화기 테스트")
    print("=" * 60)
    pytest.main([__file__, "-v"])
