"""
리플레이 버퍼 (보상 기반 삽입 / FIFO 삽입, 균등 비복원 샘플링)
"""
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from src.utils.logger import setup_logger

logger = setup_logger(__name__, "replay.log")


class InsertionPolicy(str, Enum):
    REWARD_AWARE = "reward_aware"  # 최악 보상 전이만 교체 (static / sequential)
    FIFO = "fifo"                  # 가장 오래된 전이 제거 (quasi-dynamic)


@dataclass(frozen=True)
class Transition:
    """(s, a, r, s′) 전이 (done 은 종료 전이의 bootstrap 마스크)"""

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool = False

    def to_dict(self) -> dict:
        return {
            "s": self.state.tolist(),
            "a": self.action.tolist(),
            "r": self.reward,
            "s_next": self.next_state.tolist(),
            "done": self.done,
        }


@dataclass
class TransitionBatch:
    """미니배치 (행 단위로 쌓은 배열)"""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return int(self.rewards.shape[0])

    @classmethod
    def from_transitions(cls, transitions: List[Transition]) -> "TransitionBatch":
        return cls(
            states=np.stack([t.state for t in transitions]),
            actions=np.stack([t.action for t in transitions]),
            rewards=np.array([t.reward for t in transitions], dtype=np.float64),
            next_states=np.stack([t.next_state for t in transitions]),
            dones=np.array([t.done for t in transitions], dtype=np.float64),
        )


class ReplayBuffer:
    """유한 용량 리플레이 버퍼 (단일 writer)"""

    def __init__(self, capacity: int, policy: Union[str, InsertionPolicy] = InsertionPolicy.REWARD_AWARE):
        """
        초기화

        Args:
            capacity: 최대 전이 수 C
            policy: 가득 찼을 때 삽입 정책
        """
        if capacity < 1:
            raise ValueError(f"버퍼 용량은 1 이상: {capacity}")
        self.capacity = capacity
        self.policy = InsertionPolicy(policy)
        self._memory: List[Transition] = []
        self.accepted = 0
        self.rejected = 0

    def __len__(self) -> int:
        return len(self._memory)

    @property
    def is_full(self) -> bool:
        return len(self._memory) >= self.capacity

    @property
    def transitions(self) -> List[Transition]:
        return list(self._memory)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([t.reward for t in self._memory], dtype=np.float64)

    @property
    def min_reward(self) -> Optional[float]:
        if not self._memory:
            return None
        return float(self.rewards.min())

    @property
    def mean_reward(self) -> Optional[float]:
        if not self._memory:
            return None
        return float(self.rewards.mean())

    def store(self, transition: Transition) -> bool:
        """
        전이 저장

        가득 차지 않았으면 추가. 가득 찼으면
        reward_aware: r > 현재 최소 보상일 때만 최소 전이를 교체 (동률은 거부),
        fifo: 가장 오래된 전이를 제거하고 항상 추가.

        Returns:
            저장 여부
        """
        if not self.is_full:
            self._memory.append(transition)
            self.accepted += 1
            return True

        if self.policy is InsertionPolicy.FIFO:
            self._memory.pop(0)
            self._memory.append(transition)
            self.accepted += 1
            return True

        worst = int(np.argmin(self.rewards))
        if transition.reward > self._memory[worst].reward:
            self._memory[worst] = transition
            self.accepted += 1
            return True

        self.rejected += 1
        return False

    def is_ready(self, batch_size: int) -> bool:
        return len(self._memory) >= batch_size

    def sample(self, batch_size: int, rng: np.random.Generator) -> Optional[TransitionBatch]:
        """
        균등 비복원 미니배치 샘플링

        Args:
            batch_size: 배치 크기
            rng: 난수 생성기

        Returns:
            TransitionBatch, 버퍼가 배치보다 작으면 None (학습 생략 신호)
        """
        if not self.is_ready(batch_size):
            return None
        idx = rng.choice(len(self._memory), size=batch_size, replace=False)
        return TransitionBatch.from_transitions([self._memory[i] for i in idx])

    def dump_jsonl(self, filepath: Path) -> Path:
        """디버깅용 JSONL 덤프"""
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8') as f:
            for transition in self._memory:
                f.write(json.dumps(transition.to_dict()) + "\n")
        logger.info(f"리플레이 버퍼 덤프: {filepath} ({len(self._memory)}개 전이)")
        return filepath
