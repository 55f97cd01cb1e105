"""
액터-크리틱 에이전트 공통 루프

에피소드 진행, LearningFlag, 평가 에피소드, 체크포인트를 담당한다.
알고리즘별 네트워크와 갱신 규칙은 하위 클래스(DDPG, SAC)가 구현한다.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np

from config.settings import N_PARAMS
from src.agents.nn import MlpParams, xavier_init
from src.agents.replay import InsertionPolicy, ReplayBuffer, Transition
from src.harness.config import HyperParams
from src.market.env import EnvState, StateNormalizer, VolFittingEnv
from src.market.simulator import ScenarioKind
from src.utils.exceptions import CheckpointError
from src.utils.helpers import arrays_hash
from src.utils.logger import setup_logger


@dataclass
class StepRecord:
    """학습 step 한 번의 기록 (trace CSV 한 행)"""

    episode: int
    step: int
    reward: float
    det_reward: float
    theta: np.ndarray
    det_theta: np.ndarray
    learning_flag: bool
    stats: Dict[str, float] = field(default_factory=dict)

    def to_row(self) -> Dict[str, Any]:
        row = {
            "episode": self.episode,
            "step": self.step,
            "r": self.reward,
            "r_D": self.det_reward,
        }
        row.update(self.stats)
        row["learning_flag"] = int(self.learning_flag)
        return row


@dataclass
class EpisodeLog:
    """학습 에피소드 기록"""

    episode: int
    steps: List[StepRecord] = field(default_factory=list)
    buffer_min: Optional[float] = None
    buffer_mean: Optional[float] = None

    @property
    def rewards(self) -> List[float]:
        return [s.reward for s in self.steps]

    @property
    def det_rewards(self) -> List[float]:
        return [s.det_reward for s in self.steps]

    @property
    def final_theta(self) -> np.ndarray:
        return self.steps[-1].theta

    @property
    def final_det_theta(self) -> np.ndarray:
        """마지막 step 의 결정적 응답 θ"""
        return self.steps[-1].det_theta

    @property
    def best_det_reward(self) -> float:
        return max(self.det_rewards)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "episode": self.episode,
            "rewards": self.rewards,
            "det_rewards": self.det_rewards,
            "final_theta": self.final_theta.tolist(),
            "final_det_theta": self.final_det_theta.tolist(),
            "buffer_min": self.buffer_min,
            "buffer_mean": self.buffer_mean,
        }


@dataclass
class EvaluationResult:
    """평가 에피소드 결과 (노이즈 없음, 갱신 없음)"""

    rewards: List[float]
    thetas: List[np.ndarray]
    mids: List[np.ndarray]

    @property
    def mean_reward(self) -> float:
        return float(np.mean(self.rewards))


class BaseAgent(ABC):
    """
    액터-크리틱 에이전트 기반 클래스

    리플레이 버퍼에는 원시 상태를 저장하고, 네트워크는 정규화된 상태를 본다.
    정규화 통계는 LearningFlag 가 켜진 학습 step 에서만 갱신된다.
    """

    algorithm = "base"
    # trace CSV 에서 episode, step, r, r_D 뒤에 오는 열 (learning_flag 는 마지막)
    trace_columns: List[str] = []

    def __init__(
        self,
        state_dim: int,
        hyper: HyperParams,
        seed: Optional[int] = None,
        scenario: Union[str, ScenarioKind] = ScenarioKind.STATIC,
        reward_threshold: Optional[float] = None,
        action_dim: int = N_PARAMS
    ):
        """
        초기화

        Args:
            state_dim: 상태 차원 (2n + K)
            hyper: 하이퍼파라미터
            seed: 네트워크 초기화 / 탐색 / 샘플링 시드
            scenario: 시장 시나리오 (LearningFlag 기준과 버퍼 정책 결정)
            reward_threshold: R_0 (None 이면 LearningFlag 를 끄지 않음)
            action_dim: 행동 차원 K
        """
        self.logger = setup_logger(__name__, "agents.log")
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.hyper = hyper
        self.seed = seed
        self.scenario = ScenarioKind(scenario)
        self.reward_threshold = reward_threshold
        self.rng = np.random.default_rng(seed)

        self.normalizer = StateNormalizer(state_dim)
        policy = InsertionPolicy.FIFO if self.scenario is ScenarioKind.QUASI_DYNAMIC else InsertionPolicy.REWARD_AWARE
        self.buffer = ReplayBuffer(hyper.buffer_size, policy)
        self.learning_flag = True
        self.updates = 0

    # ------------------------------------------------------------------
    # 하위 클래스 구현

    @abstractmethod
    def networks(self) -> Dict[str, MlpParams]:
        """이름 → 네트워크 (체크포인트 / 해시 대상)"""

    @abstractmethod
    def act(self, x: np.ndarray) -> np.ndarray:
        """정규화된 상태에서 결정적 행동"""

    @abstractmethod
    def explore(self, x: np.ndarray, episode: int, total_episodes: int) -> np.ndarray:
        """정규화된 상태에서 탐색 행동"""

    @abstractmethod
    def learn(self, batch) -> Dict[str, float]:
        """미니배치 한 개로 크리틱/액터/타깃 갱신, trace 값 반환"""

    def begin_episode(self, episode: int, total_episodes: int):
        """에피소드 시작 훅 (OU 노이즈 초기화 등)"""

    def exploration_stats(self, episode: int, total_episodes: int) -> Dict[str, float]:
        """step 과 무관한 탐색 파라미터 trace 값"""
        return {}

    def extra_state(self) -> Dict[str, Any]:
        return {}

    def load_extra_state(self, data: Dict[str, Any]):
        pass

    # ------------------------------------------------------------------

    def build_net(self, d_in: int, d_out: int, head: str = "linear", head_scale: float = 1.0) -> MlpParams:
        """은닉층 hidden_layers × hidden_units (ReLU) 네트워크"""
        dims = [d_in] + [self.hyper.hidden_units] * self.hyper.hidden_layers + [d_out]
        return xavier_init(dims, self.rng, head=head, head_scale=head_scale)

    def clip(self, action: np.ndarray) -> np.ndarray:
        bound = self.hyper.action_bound
        return np.clip(action, -bound, bound)

    def deterministic_action(self, state: EnvState) -> np.ndarray:
        """원시 상태에서 결정적 행동 (정규화 통계 고정)"""
        return self.clip(self.act(self.normalizer.transform(state.vector)))

    def parameters_hash(self) -> str:
        """모든 네트워크 파라미터의 해시"""
        arrays = []
        for name in sorted(self.networks()):
            arrays.extend(self.networks()[name].parameters())
        return arrays_hash(arrays)

    def _should_stop_learning(self, det_reward: float) -> bool:
        if self.reward_threshold is None or self.scenario is ScenarioKind.QUASI_DYNAMIC:
            return False
        return det_reward > self.reward_threshold

    def train_episode(self, env: VolFittingEnv, episode: int, total_episodes: int) -> EpisodeLog:
        """
        학습 에피소드 한 개

        매 step: 결정적 행동의 보상 r^D 는 같은 호가에서 반사실적으로 계산하고,
        탐색 행동으로 환경을 진행해 전이를 버퍼에 저장한다. LearningFlag 가
        켜져 있으면 updates_per_step 번 갱신한다.

        Args:
            env: 환경 (reset 은 여기서 호출)
            episode: 바깥 루프 인덱스 n
            total_episodes: 전체 에피소드 수 N

        Returns:
            EpisodeLog
        """
        state = env.reset()
        if self.hyper.reset_learning_flag_each_episode:
            self.learning_flag = True
        self.begin_episode(episode, total_episodes)

        log = EpisodeLog(episode)
        done = False
        while not done:
            x = self.normalizer.normalize(state.vector, learning=self.learning_flag)
            det_action = self.clip(self.act(x))
            action = self.clip(self.explore(x, episode, total_episodes))
            det_reward = env.counterfactual_reward(det_action)
            det_theta = env.theta + det_action

            result = env.step(action)
            self.buffer.store(Transition(
                state.vector.copy(),
                result.info["action"],
                result.reward,
                result.state.vector.copy(),
                result.done,
            ))

            stats = self.exploration_stats(episode, total_episodes)
            if self.learning_flag:
                for _ in range(self.hyper.updates_per_step):
                    batch = self.buffer.sample(self.hyper.batch_size, self.rng)
                    if batch is None:
                        break
                    stats.update(self.learn(batch))
                    self.updates += 1

            log.steps.append(StepRecord(
                episode=episode,
                step=result.state.step,
                reward=result.reward,
                det_reward=det_reward,
                theta=result.info["theta"],
                det_theta=det_theta,
                learning_flag=self.learning_flag,
                stats={col: stats.get(col, math.nan) for col in self.trace_columns},
            ))

            if self.learning_flag and self._should_stop_learning(det_reward):
                self.learning_flag = False
                self.logger.info(
                    f"LearningFlag 해제 - 에피소드 {episode}, step {result.state.step}, "
                    f"r^D={det_reward:.6e} > R_0={self.reward_threshold:.6e}"
                )

            state = result.state
            done = result.done

        log.buffer_min = self.buffer.min_reward
        log.buffer_mean = self.buffer.mean_reward
        return log

    def evaluate_episode(self, env: VolFittingEnv) -> EvaluationResult:
        """
        평가 에피소드: 결정적 행동, 갱신 없음, 정규화 통계 고정, 에이전트 RNG 미사용

        Args:
            env: 평가용 환경 (학습 환경과 별도 시드)

        Returns:
            EvaluationResult
        """
        state = env.reset()
        rewards, thetas, mids = [], [], []
        done = False
        while not done:
            result = env.step(self.deterministic_action(state))
            rewards.append(result.reward)
            thetas.append(result.info["theta"])
            mids.append(result.info["quotes"].mid)
            state = result.state
            done = result.done
        return EvaluationResult(rewards, thetas, mids)

    def update_learning_flag_from_evaluation(self, mean_reward: float) -> bool:
        """
        quasi-dynamic: 평가 에피소드 평균 보상 r^m > R_0 이면 LearningFlag 해제

        Returns:
            갱신 후 LearningFlag
        """
        if (
            self.scenario is ScenarioKind.QUASI_DYNAMIC
            and self.reward_threshold is not None
            and self.learning_flag
            and mean_reward > self.reward_threshold
        ):
            self.learning_flag = False
            self.logger.info(f"LearningFlag 해제 - 평가 평균 {mean_reward:.6e} > R_0={self.reward_threshold:.6e}")
        return self.learning_flag

    # ------------------------------------------------------------------
    # 체크포인트

    def to_checkpoint(self) -> Dict[str, Any]:
        """네트워크, 정규화 통계, 탐색 상태, LearningFlag, R_0"""
        return {
            "algorithm": self.algorithm,
            "state_dim": self.state_dim,
            "action_dim": self.action_dim,
            "scenario": self.scenario.value,
            "seed": self.seed,
            "hyper": self.hyper.to_dict(),
            "networks": {name: net.to_dict() for name, net in self.networks().items()},
            "normalizer": self.normalizer.state_dict(),
            "learning_flag": self.learning_flag,
            "reward_threshold": self.reward_threshold,
            "updates": self.updates,
            "extra": self.extra_state(),
        }

    def load_checkpoint(self, data: Dict[str, Any]):
        """
        체크포인트 적용

        Raises:
            CheckpointError: 알고리즘 또는 차원 불일치, 누락 키
        """
        if data.get("algorithm") != self.algorithm:
            raise CheckpointError(f"알고리즘 불일치: {data.get('algorithm')} (예상: {self.algorithm})")
        if data.get("state_dim") != self.state_dim or data.get("action_dim") != self.action_dim:
            raise CheckpointError(
                f"차원 불일치: state {data.get('state_dim')}, action {data.get('action_dim')} "
                f"(예상: {self.state_dim}, {self.action_dim})"
            )
        try:
            current = self.networks()
            for name in current:
                loaded = MlpParams.from_dict(data["networks"][name])
                if loaded.dims != current[name].dims:
                    raise CheckpointError(f"{name} 구조 불일치: {loaded.dims} vs {current[name].dims}")
                setattr(self, name, loaded)
            self.normalizer = StateNormalizer.from_state_dict(data["normalizer"])
            self.learning_flag = bool(data["learning_flag"])
            self.reward_threshold = data["reward_threshold"]
            self.updates = int(data.get("updates", 0))
            self.load_extra_state(data.get("extra", {}))
        except KeyError as e:
            raise CheckpointError(f"체크포인트 키 누락: {e}") from None

    @classmethod
    def from_checkpoint(cls, data: Dict[str, Any]) -> "BaseAgent":
        """체크포인트에서 에이전트 복원"""
        try:
            hyper = HyperParams(**data["hyper"])
            agent = cls(
                state_dim=int(data["state_dim"]),
                hyper=hyper,
                seed=data.get("seed"),
                scenario=data.get("scenario", ScenarioKind.STATIC.value),
                reward_threshold=data.get("reward_threshold"),
                action_dim=int(data["action_dim"]),
            )
        except (KeyError, TypeError) as e:
            raise CheckpointError(f"체크포인트 로드 실패: {e}") from None
        agent.load_checkpoint(data)
        return agent
