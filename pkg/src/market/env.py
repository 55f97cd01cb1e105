"""
변동성 피팅 MDP 환경
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import numpy as np

from config.settings import FLAT_LEVEL, ACTION_BOUND, NORMALIZER_EPS, N_PARAMS
from src.calculator.rewards import RewardKind, reward as compute_reward
from src.calculator.volmodel import ParamForm, flat_theta, is_admissible
from src.market.simulator import MarketConfig, MarketSimulator, QuoteSlice
from src.utils.exceptions import LifecycleError, ShapeError
from src.utils.logger import setup_logger

logger = setup_logger(__name__, "env.log")


@dataclass
class EnvState:
    """
    관측 상태: (bid_j, ask_j)_{j=1..n} ⊕ 직전 θ

    Attributes:
        vector: 길이 2n+K 벡터
        step: step 카운터
    """

    vector: np.ndarray
    step: int

    @property
    def dim(self) -> int:
        return int(self.vector.size)

    def theta(self) -> np.ndarray:
        return self.vector[-N_PARAMS:].copy()


@dataclass
class StepResult:
    """step 결과"""

    state: EnvState
    reward: float
    done: bool
    info: Dict[str, Any] = field(default_factory=dict)


def pack_state(quotes: QuoteSlice, theta: np.ndarray, step: int) -> EnvState:
    """호가와 θ 를 상태 벡터로 합침"""
    interleaved = np.column_stack([quotes.bid, quotes.ask]).ravel()
    return EnvState(np.concatenate([interleaved, np.asarray(theta, dtype=np.float64)]), step)


def unpack_quotes(state: EnvState) -> QuoteSlice:
    """상태 벡터에서 호가 복원"""
    pairs = state.vector[:-N_PARAMS].reshape(-1, 2)
    return QuoteSlice(state.step, pairs[:, 0], pairs[:, 1])


class StateNormalizer:
    """
    상태 좌표별 running mean / std (Welford)

    학습 중에만 갱신하고 평가 에피소드에서는 고정한다.
    """

    def __init__(self, dim: int, eps: float = NORMALIZER_EPS):
        self.dim = dim
        self.eps = eps
        self.count = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros(dim)

    @property
    def std(self) -> np.ndarray:
        if self.count == 0:
            return np.full(self.dim, self.eps)
        return np.maximum(np.sqrt(self._m2 / self.count), self.eps)

    def update(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ShapeError(f"정규화 입력 차원 오류: {x.shape} (예상: ({self.dim},))")
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self._m2 = self._m2 + delta * (x - self.mean)

    def transform(self, x: np.ndarray) -> np.ndarray:
        """통계 갱신 없이 정규화 (배치 입력 허용)"""
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def normalize(self, x: np.ndarray, learning: bool = False) -> np.ndarray:
        """
        (s − mean) / max(std, eps)

        Args:
            x: 상태 벡터
            learning: True 면 먼저 통계를 갱신

        Returns:
            정규화된 벡터
        """
        if learning:
            self.update(x)
        return self.transform(x)

    def state_dict(self) -> Dict[str, Any]:
        return {"count": self.count, "mean": self.mean.tolist(), "m2": self._m2.tolist(), "eps": self.eps}

    @classmethod
    def from_state_dict(cls, data: Dict[str, Any]) -> "StateNormalizer":
        norm = cls(len(data["mean"]), data.get("eps", NORMALIZER_EPS))
        norm.count = int(data["count"])
        norm.mean = np.asarray(data["mean"], dtype=np.float64)
        norm._m2 = np.asarray(data["m2"], dtype=np.float64)
        return norm


def normalize(norm: StateNormalizer, s: EnvState, learning: bool = False) -> np.ndarray:
    """상태 정규화 (learning 플래그가 켜진 경우에만 통계 갱신)"""
    return norm.normalize(s.vector, learning)


class VolFittingEnv:
    """
    변동성 피팅 환경

    static: 1 step 후 종료, sequential: M step (호가 고정),
    quasi-dynamic: M step, 매 step 코퓰러에서 새 호가.
    보상은 행동 시점에 보이던 호가로 계산하고 다음 상태가 새 호가를 보여준다.
    """

    def __init__(
        self,
        market: MarketConfig,
        reward_kind: Union[str, RewardKind] = RewardKind.MSE,
        form: Union[str, ParamForm] = ParamForm.QUADRATIC,
        seed: Optional[int] = None,
        flat_level: float = FLAT_LEVEL,
        action_bound: float = ACTION_BOUND
    ):
        """
        초기화

        Args:
            market: 시장 설정
            reward_kind: 보상 종류
            form: 파라미터 형식
            seed: 호가 난수 시드
            flat_level: 초기 flat 변동성 수준
            action_bound: 계수별 bump 상한 a_max
        """
        self.market = market
        self.grid = market.grid
        self.reward_kind = RewardKind.parse(reward_kind)
        self.form = ParamForm.parse(form)
        self.flat_level = flat_level
        self.action_bound = action_bound
        self.simulator = MarketSimulator(market, seed)

        self.theta: Optional[np.ndarray] = None
        self.quotes: Optional[QuoteSlice] = None
        self.step_count = 0
        self.done = True

    @property
    def state_dim(self) -> int:
        return 2 * self.grid.size + N_PARAMS

    @property
    def action_dim(self) -> int:
        return N_PARAMS

    @property
    def max_steps(self) -> int:
        return self.market.steps_per_episode

    def reseed(self, seed: Optional[int]):
        self.simulator.reseed(seed)

    def reset(self) -> EnvState:
        """
        에피소드 시작: flat θ_0 와 첫 호가 슬라이스

        Returns:
            s_0
        """
        self.theta = flat_theta(self.flat_level, self.form, self.grid)
        self.quotes = self.simulator.reset()
        self.step_count = 0
        self.done = False
        return self.state

    @property
    def state(self) -> EnvState:
        return pack_state(self.quotes, self.theta, self.step_count)

    def clip_action(self, action: np.ndarray) -> np.ndarray:
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape != (N_PARAMS,):
            raise ShapeError(f"행동 차원 오류: {action.shape} (예상: ({N_PARAMS},))")
        return np.clip(action, -self.action_bound, self.action_bound)

    def counterfactual_reward(self, action: np.ndarray) -> float:
        """
        환경을 진행하지 않고 현재 호가에서 행동의 보상 계산

        DDPG/SAC 의 결정적 행동 보상 r^D 에 사용.
        """
        theta_new = self.theta + self.clip_action(action)
        return compute_reward(theta_new, self.quotes, self.grid, self.reward_kind, self.form)

    def step(self, action: np.ndarray) -> StepResult:
        """
        행동 적용: θ_new = θ_old + clip(Δθ)

        Args:
            action: Δθ (K)

        Returns:
            StepResult (다음 상태, 보상, 종료 여부, info)

        Raises:
            LifecycleError: 종료된 에피소드에서 호출
        """
        if self.done or self.theta is None:
            raise LifecycleError("종료된 에피소드에서 step 호출 (reset 필요)")

        clipped = self.clip_action(action)
        theta_new = self.theta + clipped
        decision_quotes = self.quotes
        r = compute_reward(theta_new, decision_quotes, self.grid, self.reward_kind, self.form)

        admissible = is_admissible(theta_new, self.grid, self.form)
        if not admissible:
            logger.debug(f"허용되지 않는 θ (음수 변동성): {theta_new.tolist()}")

        self.theta = theta_new
        self.step_count += 1
        self.done = self.step_count >= self.max_steps
        # 종료 step 의 다음 상태는 이전 호가를 유지 (done 마스크로 타깃에서 제외)
        if not self.done:
            self.quotes = self.simulator.advance()

        info = {
            "theta": theta_new.copy(),
            "action": clipped,
            "quotes": decision_quotes,
            "admissible": admissible,
        }
        return StepResult(self.state, float(r), self.done, info)
