"""
변동성 슬라이스 모델 테스트
"""
import numpy as np
import pytest
from scipy.stats import norm

from src.calculator.volmodel import (
    MoneynessGrid,
    ParamForm,
    bs_vega,
    eval_slice,
    flat_theta,
    is_admissible,
    slice_gradient
)
from src.utils.exceptions import EmptyGridError, InvalidParameterError, InvalidVolError


def _bs_call(kappa, sigma, maturity):
    """forward = 1 기준 Black-Scholes 콜 가격 (베가 차분 검증용)"""
    strike = np.exp(kappa)
    sqrt_t = np.sqrt(maturity)
    d1 = (-kappa + 0.5 * sigma ** 2 * maturity) / (sigma * sqrt_t)
    d2 = d1 - sigma * sqrt_t
    return norm.cdf(d1) - strike * norm.cdf(d2)


def test_quadratic_examples():
    """quadratic 형식 기본 값"""
    assert eval_slice([0.2, 0.0, 0.0], [0.1])[0] == pytest.approx(0.2)
    assert eval_slice([0.2, -0.1, 0.5], [0.0])[0] == pytest.approx(0.2)
    assert eval_slice([0.2, -0.1, 0.5], [0.2])[0] == pytest.approx(0.2, abs=1e-15)


def test_eval_slice_batch_matches_rows():
    """배치 입력은 행별 평가와 같음"""
    grid = MoneynessGrid.default()
    rng = np.random.default_rng(3)
    thetas = rng.normal(0.0, 0.3, size=(5, 3))
    batch = eval_slice(thetas, grid)
    assert batch.shape == (5, grid.size)
    for i in range(5):
        np.testing.assert_allclose(batch[i], eval_slice(thetas[i], grid))


def test_invalid_theta():
    """θ 길이 / 유한성 검증"""
    grid = MoneynessGrid.default()
    with pytest.raises(InvalidParameterError):
        eval_slice([0.2, 0.0], grid)
    with pytest.raises(InvalidParameterError):
        eval_slice([0.2, np.nan, 0.0], grid)


def test_grid_validation():
    """빈 그리드 / 비단조 그리드"""
    with pytest.raises(EmptyGridError):
        MoneynessGrid(())
    with pytest.raises(InvalidParameterError):
        MoneynessGrid((0.1, 0.0, 0.2))
    with pytest.raises(EmptyGridError):
        eval_slice([0.2, 0.0, 0.0], [])


def test_svi_flat_prior():
    """svi_reduced flat θ 는 모든 κ 에서 level"""
    grid = MoneynessGrid.default()
    theta = flat_theta(0.2, ParamForm.SVI_REDUCED, grid)
    np.testing.assert_allclose(eval_slice(theta, grid, ParamForm.SVI_REDUCED), 0.2, atol=1e-12)


def test_svi_variance_floor():
    """음의 총분산은 하한으로 잘림"""
    grid = MoneynessGrid.default()
    vols = eval_slice([-1.0, 0.0, 0.0], grid, "svi_reduced")
    assert np.all(vols > 0)
    assert np.all(np.isfinite(vols))
    assert not is_admissible([-1.0, 0.0, 0.0], grid, "svi_reduced")


def test_bs_vega_examples():
    """베가 기본 값과 가격 차분 비교"""
    assert bs_vega(0.0, 0.2, 1.0) == pytest.approx(norm.pdf(0.1), abs=1e-12)
    assert bs_vega(0.0, 0.2, 1.0) == pytest.approx(0.396953, abs=1e-6)
    assert bs_vega(0.02, 0.2, 1.0) == pytest.approx(0.398942, abs=1e-6)
    assert bs_vega(0.0, 50.0, 1.0) < 1e-6

    h = 1e-6
    fd = (_bs_call(0.1, 0.25 + h, 0.5) - _bs_call(0.1, 0.25 - h, 0.5)) / (2 * h)
    assert bs_vega(0.1, 0.25, 0.5) == pytest.approx(fd, rel=1e-6)


def test_bs_vega_invalid():
    """σ ≤ 0 은 오류"""
    with pytest.raises(InvalidVolError):
        bs_vega(0.0, 0.0, 1.0)
    with pytest.raises(InvalidVolError):
        bs_vega([0.0, 0.1], [0.2, -0.1], 1.0)


def test_bs_vega_peak_location():
    """σ, T 고정 시 κ = σ²T/2 에서 최대, 전 구간 양수"""
    for sigma, maturity in [(0.2, 1.0), (0.5, 2.0), (0.1, 0.25)]:
        peak = 0.5 * sigma ** 2 * maturity
        kappas = np.sort(np.append(np.linspace(-1.0, 1.0, 401), peak))
        vegas = bs_vega(kappas, sigma, maturity)
        assert np.all(vegas >= 0.0)
        assert kappas[np.argmax(vegas)] == pytest.approx(peak)
        assert np.max(vegas) == pytest.approx(norm.pdf(0.0) * np.sqrt(maturity))


def test_quadratic_lipschitz_bound():
    """|σ(θ+δ) − σ(θ)| ≤ max(1, |κ|, κ²)·‖δ‖₁"""
    grid = MoneynessGrid((-1.5, -0.4, 0.0, 0.3, 2.0))
    lip = max(1.0, np.max(np.abs(grid.array)), np.max(grid.array ** 2))
    rng = np.random.default_rng(21)
    for _ in range(200):
        theta = rng.normal(0.0, 0.5, size=3)
        delta = rng.normal(0.0, 0.1, size=3)
        change = np.abs(eval_slice(theta + delta, grid) - eval_slice(theta, grid))
        assert np.all(change <= lip * np.sum(np.abs(delta)) + 1e-15)


def test_admissibility():
    """음수 변동성이 있으면 허용되지 않음"""
    grid = MoneynessGrid.default()
    assert is_admissible([0.2, 0.0, 0.0], grid)
    assert not is_admissible([0.01, 0.0, -1.0], grid)


@pytest.mark.parametrize("form", ["quadratic", "svi_reduced"])
def test_slice_gradient_matches_finite_differences(form):
    """해석적 야코비안 vs 중앙 차분"""
    grid = MoneynessGrid.default()
    theta = np.array([0.22, -0.05, 0.3]) if form == "quadratic" else np.array([0.04, 0.1, -0.3])
    jac = slice_gradient(theta, grid, form)
    h = 1e-7
    for i in range(3):
        bump = np.zeros(3)
        bump[i] = h
        fd = (eval_slice(theta + bump, grid, form) - eval_slice(theta - bump, grid, form)) / (2 * h)
        np.testing.assert_allclose(jac[:, i], fd, rtol=1e-5, atol=1e-8)


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("📐 변동성 슬라이스 모델 테스트")
    print("=" * 60)
    pytest.main([__file__, "-v"])
