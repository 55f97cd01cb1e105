"""
DDPG 변형 (거듭제곱 감쇠 가우시안 탐색, LearningFlag, 타깃 네트워크)
"""
from typing import Dict, Optional, Tuple

import numpy as np

from config.settings import OU_DT, OU_THETA
from src.agents.base import BaseAgent
from src.agents.nn import AdamConfig, MlpParams, adam_step, backward, forward, polyak_update
from src.agents.replay import TransitionBatch


def noise_sigma(
    episode: int,
    total_episodes: int,
    sigma_max: float,
    sigma_min: float,
    power: float = 4.0
) -> float:
    """
    σ_n = max(σ_0 (1 − n/N)^p, σ_min)

    Args:
        episode: 바깥 루프 인덱스 n
        total_episodes: 전체 에피소드 수 N
        sigma_max: σ_0
        sigma_min: 하한
        power: 감쇠 지수

    Returns:
        탐색 노이즈 표준편차
    """
    if total_episodes <= 0:
        return sigma_max
    progress = min(max(episode / total_episodes, 0.0), 1.0)
    return max(sigma_max * (1.0 - progress) ** power, sigma_min)


class DdpgAgent(BaseAgent):
    """
    DDPG 에이전트

    actor: 상태 → a_max·tanh(·), critic: [상태, 행동] → 스칼라.
    타깃 네트워크는 Polyak 평균으로만 갱신한다.
    """

    algorithm = "ddpg"
    trace_columns = ["critic_loss", "actor_obj", "sigma_n"]

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        k = self.action_dim
        self.actor = self.build_net(self.state_dim, k, head="tanh", head_scale=self.hyper.action_bound)
        self.critic = self.build_net(self.state_dim + k, 1)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = AdamConfig(self.hyper.actor_lr)
        self.critic_opt = AdamConfig(self.hyper.critic_lr)
        self.ou_state = np.zeros(k)

    def networks(self) -> Dict[str, MlpParams]:
        return {
            "actor": self.actor,
            "critic": self.critic,
            "actor_target": self.actor_target,
            "critic_target": self.critic_target,
        }

    def sigma(self, episode: int, total_episodes: int) -> float:
        return noise_sigma(
            episode, total_episodes, self.hyper.sigma_max, self.hyper.sigma_min, self.hyper.noise_power
        )

    def act(self, x: np.ndarray) -> np.ndarray:
        action, _ = forward(self.actor, x)
        return action

    def begin_episode(self, episode: int, total_episodes: int):
        self.ou_state = np.zeros(self.action_dim)

    def explore(self, x: np.ndarray, episode: int, total_episodes: int) -> np.ndarray:
        """
        결정적 행동 + 탐색 노이즈 (좌표별 독립), [−a_max, a_max] 로 자름

        gaussian: ε ~ N(0, σ_n²), ou: x ← x + θ(μ − x)dt + σ_n√dt·N(0, 1)
        """
        sigma = self.sigma(episode, total_episodes)
        if self.hyper.noise_kind == "ou":
            self.ou_state = (
                self.ou_state
                + OU_THETA * (0.0 - self.ou_state) * OU_DT
                + sigma * np.sqrt(OU_DT) * self.rng.standard_normal(self.action_dim)
            )
            noise = self.ou_state
        else:
            noise = self.rng.normal(0.0, sigma, self.action_dim)
        return self.clip(self.act(x) + noise)

    def exploration_stats(self, episode: int, total_episodes: int) -> Dict[str, float]:
        return {"sigma_n": self.sigma(episode, total_episodes)}

    def q_value_and_action_grad(self, s: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Q(s, a) 와 행 별 ∂Q/∂a (critic 파라미터는 바뀌지 않음)

        Returns:
            (q (B,), dq/da (B, K))
        """
        q, cache = forward(self.critic, np.hstack([s, a]))
        grads = backward(self.critic, cache, np.ones_like(q))
        return q[:, 0], grads.input[:, self.state_dim:]

    def critic_targets(self, next_states: np.ndarray, rewards: np.ndarray, dones: np.ndarray) -> np.ndarray:
        """Y = r + γ(1 − d)·Q̄(s′, π̄(s′)) (타깃 네트워크만 사용)"""
        next_actions, _ = forward(self.actor_target, next_states)
        q_next, _ = forward(self.critic_target, np.hstack([next_states, next_actions]))
        return rewards + self.hyper.gamma * (1.0 - dones) * q_next[:, 0]

    def critic_update(self, batch: TransitionBatch) -> float:
        """
        크리틱 Adam 한 step: L = mean((Y − Q(s, a))²)

        Returns:
            갱신 전 손실
        """
        states = self.normalizer.transform(batch.states)
        next_states = self.normalizer.transform(batch.next_states)
        targets = self.critic_targets(next_states, batch.rewards, batch.dones)

        q, cache = forward(self.critic, np.hstack([states, batch.actions]))
        diff = q[:, 0] - targets
        loss = float(np.mean(diff ** 2))
        grads = backward(self.critic, cache, (2.0 / len(batch)) * diff[:, None])
        adam_step(self.critic, grads, self.critic_opt)
        return loss

    def actor_update(self, batch: TransitionBatch) -> float:
        """
        액터 Adam 상승 한 step: mean Q(s, π(s)), critic 은 고정

        Returns:
            갱신 전 목적함수 값 (배치 평균 Q)
        """
        states = self.normalizer.transform(batch.states)
        actions, cache = forward(self.actor, states)
        q, dq_da = self.q_value_and_action_grad(states, actions)
        # 상승 = −J 하강
        grads = backward(self.actor, cache, -dq_da / len(batch))
        adam_step(self.actor, grads, self.actor_opt)
        return float(np.mean(q))

    def update_targets(self):
        polyak_update(self.actor_target, self.actor, self.hyper.tau)
        polyak_update(self.critic_target, self.critic, self.hyper.tau)

    def learn(self, batch: TransitionBatch) -> Dict[str, float]:
        critic_loss = self.critic_update(batch)
        actor_obj = self.actor_update(batch)
        self.update_targets()
        return {"critic_loss": critic_loss, "actor_obj": actor_obj}

    def extra_state(self) -> Dict[str, Optional[list]]:
        return {"ou_state": self.ou_state.tolist()}

    def load_extra_state(self, data):
        if "ou_state" in data:
            self.ou_state = np.asarray(data["ou_state"], dtype=np.float64)
