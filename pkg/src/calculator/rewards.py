"""
피팅 오차 ξ(θ) 및 보상 계산
"""
from enum import Enum
from typing import Optional, Union

import numpy as np

from config.settings import MODEL_VOL_FLOOR, REWARD_SPREAD_FLOOR
from src.calculator.volmodel import MoneynessGrid, ParamForm, bs_vega, eval_slice
from src.market.simulator import QuoteSlice
from src.utils.exceptions import ConfigError, SpreadDivisionError


class RewardKind(str, Enum):
    """보상 함수 종류"""

    MSE = "mse"    # 단순 제곱오차 합
    BMSE = "bmse"  # Black-Scholes 베가 가중
    SMSE = "smse"  # 스프레드 스케일

    @classmethod
    def parse(cls, value: Union[str, "RewardKind"]) -> "RewardKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"알 수 없는 보상 종류: {value}") from None


def reward_weights(
    quotes: QuoteSlice,
    grid: MoneynessGrid,
    kind: Union[str, RewardKind],
    spread_floor: Optional[float] = REWARD_SPREAD_FLOOR
) -> np.ndarray:
    """
    그리드 점별 가중치 w_j (ξ = Σ w_j (mid_j − Ψ_θ(κ_j))²)

    MSE: 1,  BMSE: vega(κ_j, mid_j, T),  SMSE: 1 / max(spread_j, floor)²

    Raises:
        SpreadDivisionError: SMSE 에서 하한 없이 스프레드 0
    """
    kind = RewardKind.parse(kind)
    if kind is RewardKind.MSE:
        return np.ones(quotes.size)
    if kind is RewardKind.BMSE:
        # 베가는 시장 mid 기준 (행동과 무관한 가중치)
        return np.asarray(bs_vega(grid.array, quotes.mid, grid.maturity))

    spread = quotes.spread
    if spread_floor is not None:
        spread = np.maximum(spread, spread_floor)
    elif np.any(spread <= 0.0):
        raise SpreadDivisionError("SMSE: 스프레드가 0 인 점이 있음 (하한 비활성화)")
    return 1.0 / spread ** 2


def fit_error(
    theta,
    quotes: QuoteSlice,
    grid: MoneynessGrid,
    kind: Union[str, RewardKind] = RewardKind.MSE,
    form: Union[str, ParamForm] = ParamForm.QUADRATIC,
    spread_floor: Optional[float] = REWARD_SPREAD_FLOOR
) -> Union[float, np.ndarray]:
    """
    피팅 오차 ξ(θ) ≥ 0

    음수 모델 변동성은 MODEL_VOL_FLOOR 로 잘라서 평가한다.

    Args:
        theta: 파라미터 (K,) 또는 배치 (m, K)
        quotes: 호가 슬라이스
        grid: 머니니스 그리드
        kind: 보상 종류
        form: 파라미터 형식
        spread_floor: SMSE 스프레드 하한 (None 이면 비활성화)

    Returns:
        ξ (스칼라 또는 (m,))
    """
    weights = reward_weights(quotes, grid, kind, spread_floor)
    model = np.maximum(eval_slice(theta, grid, form), MODEL_VOL_FLOOR)
    residual = quotes.mid - model
    xi = np.sum(weights * residual ** 2, axis=-1)
    if np.ndim(xi) == 0:
        return float(xi)
    return xi


def reward(
    theta,
    quotes: QuoteSlice,
    grid: MoneynessGrid,
    kind: Union[str, RewardKind] = RewardKind.MSE,
    form: Union[str, ParamForm] = ParamForm.QUADRATIC,
    spread_floor: Optional[float] = REWARD_SPREAD_FLOOR
) -> Union[float, np.ndarray]:
    """보상 r = −ξ(θ) ≤ 0"""
    return -fit_error(theta, quotes, grid, kind, form, spread_floor)
