"""
SAC 변형 (쌍둥이 크리틱, 재매개화 가우시안 정책, 자동 온도 조정)

정책: u = μ + ε⊙σ, a = a_max·tanh(u), log σ ∈ [LOG_STD_MIN, LOG_STD_MAX].
크리틱 타깃은 다음 상태에서 새로 뽑은 행동 a′ 를 쓴다:
y = r + γ(1 − d)(min(Q̄_1, Q̄_2)(s′, a′) − α log π(a′|s′)).
"""
import math
from typing import Dict, Optional, Tuple

import numpy as np

from config.settings import LOG_STD_MAX, LOG_STD_MIN
from src.agents.base import BaseAgent
from src.agents.nn import (
    AdamConfig,
    AdamMoments,
    Gradients,
    MlpParams,
    adam_step,
    adam_update,
    backward,
    forward,
    polyak_update
)
from src.agents.replay import TransitionBatch

LOG_2PI = math.log(2.0 * math.pi)


def squashed_log_prob(u: np.ndarray, mu: np.ndarray, log_std: np.ndarray, action_bound: float) -> np.ndarray:
    """
    a = a_max·tanh(u) 의 로그 밀도

    대각 가우시안 로그 밀도에서 Σ log(1 − tanh²u) 와 K·log a_max 를 뺀다.
    log(1 − tanh²u) = 2(log 2 − u − softplus(−2u)) 로 계산한다.

    Args:
        u: tanh 이전 값 (..., K)
        mu: 평균 (..., K)
        log_std: 로그 표준편차 (..., K)
        action_bound: a_max

    Returns:
        log π(a|s) (...)
    """
    z = (u - mu) / np.exp(log_std)
    gaussian = np.sum(-0.5 * z ** 2 - log_std - 0.5 * LOG_2PI, axis=-1)
    correction = np.sum(2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u)), axis=-1)
    k = u.shape[-1]
    return gaussian - correction - k * math.log(action_bound)


def squashed_log_density(a: np.ndarray, mu: np.ndarray, log_std: np.ndarray, action_bound: float) -> np.ndarray:
    """행동 공간 좌표 a ∈ (−a_max, a_max) 에서 log π(a)"""
    u = np.arctanh(np.asarray(a, dtype=np.float64) / action_bound)
    return squashed_log_prob(u, mu, log_std, action_bound)


class SacAgent(BaseAgent):
    """
    SAC 에이전트

    actor 출력은 [μ (K), log σ (K)], 크리틱 두 개와 타깃 크리틱 두 개.
    α 는 log α 로 매개화해 항상 양수다.
    """

    algorithm = "sac"
    trace_columns = ["critic_loss", "actor_obj", "alpha", "entropy_estimate", "J_Q1", "J_Q2", "J_pi"]

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        k = self.action_dim
        self.actor = self.build_net(self.state_dim, 2 * k)
        self.critic1 = self.build_net(self.state_dim + k, 1)
        self.critic2 = self.build_net(self.state_dim + k, 1)
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_opt = AdamConfig(self.hyper.actor_lr)
        self.critic_opt = AdamConfig(self.hyper.critic_lr)
        self.alpha_opt = AdamConfig(self.hyper.alpha_lr)

        self.entropy_target = (
            self.hyper.entropy_target if self.hyper.entropy_target is not None else -float(k)
        )
        self.log_alpha = np.array([math.log(self.hyper.initial_alpha)])
        self.alpha_moments = AdamMoments.zeros_like([self.log_alpha])
        self._last_log_probs: Optional[np.ndarray] = None

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def networks(self) -> Dict[str, MlpParams]:
        return {
            "actor": self.actor,
            "critic1": self.critic1,
            "critic2": self.critic2,
            "critic1_target": self.critic1_target,
            "critic2_target": self.critic2_target,
        }

    def policy(self, x: np.ndarray):
        """
        정책 분포 파라미터

        Returns:
            (μ, log σ (clamp 적용), clamp 이전 log σ, forward 캐시)
        """
        out, cache = forward(self.actor, x)
        k = self.action_dim
        mu = out[..., :k]
        raw_log_std = out[..., k:]
        return mu, np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX), raw_log_std, cache

    def sample_action(self, x: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """
        재매개화 샘플링: a = a_max·tanh(μ + ε⊙σ), ε ~ N(0, I)

        Args:
            x: 정규화된 상태 (d,) 또는 (B, d)
            rng: 난수 생성기

        Returns:
            (행동, log π(a|s))
        """
        mu, log_std, _, _ = self.policy(x)
        eps = rng.standard_normal(mu.shape)
        u = mu + eps * np.exp(log_std)
        action = self.hyper.action_bound * np.tanh(u)
        return action, squashed_log_prob(u, mu, log_std, self.hyper.action_bound)

    def act(self, x: np.ndarray) -> np.ndarray:
        mu, _, _, _ = self.policy(x)
        return self.hyper.action_bound * np.tanh(mu)

    def explore(self, x: np.ndarray, episode: int, total_episodes: int) -> np.ndarray:
        action, _ = self.sample_action(x, self.rng)
        return action

    def exploration_stats(self, episode: int, total_episodes: int) -> Dict[str, float]:
        return {"alpha": self.alpha}

    def q_value_and_action_grad(self, s: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        min(Q_1, Q_2)(s, a) 와 행 별 ∂/∂a (더 작은 크리틱의 기울기)

        Returns:
            (q (B,), dq/da (B, K))
        """
        sa = np.hstack([s, a])
        q1, cache1 = forward(self.critic1, sa)
        q2, cache2 = forward(self.critic2, sa)
        use_first = q1[:, 0] <= q2[:, 0]
        mask1 = use_first.astype(np.float64)[:, None]
        g1 = backward(self.critic1, cache1, mask1).input[:, self.state_dim:]
        g2 = backward(self.critic2, cache2, 1.0 - mask1).input[:, self.state_dim:]
        return np.minimum(q1[:, 0], q2[:, 0]), g1 + g2

    def critic_targets(
        self,
        next_states: np.ndarray,
        rewards: np.ndarray,
        dones: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        y = r + γ(1 − d)(min(Q̄_1, Q̄_2)(s′, a′) − α log π(a′|s′)), a′ 는 현재 정책에서 샘플

        Returns:
            (y, a′, log π(a′|s′))
        """
        next_actions, next_log_probs = self.sample_action(next_states, self.rng)
        sa = np.hstack([next_states, next_actions])
        q1, _ = forward(self.critic1_target, sa)
        q2, _ = forward(self.critic2_target, sa)
        soft_value = np.minimum(q1[:, 0], q2[:, 0]) - self.alpha * next_log_probs
        targets = rewards + self.hyper.gamma * (1.0 - dones) * soft_value
        return targets, next_actions, next_log_probs

    def critic_update_sac(self, batch: TransitionBatch) -> Tuple[float, float]:
        """
        두 크리틱 각각 Adam 한 step: J_Qi = mean((Q_i(s, a) − y)²)

        Returns:
            (J_Q1, J_Q2) 갱신 전 손실
        """
        states = self.normalizer.transform(batch.states)
        next_states = self.normalizer.transform(batch.next_states)
        targets, _, _ = self.critic_targets(next_states, batch.rewards, batch.dones)

        sa = np.hstack([states, batch.actions])
        losses = []
        for critic in (self.critic1, self.critic2):
            q, cache = forward(critic, sa)
            diff = q[:, 0] - targets
            losses.append(float(np.mean(diff ** 2)))
            grads = backward(critic, cache, (2.0 / len(batch)) * diff[:, None])
            adam_step(critic, grads, self.critic_opt)
        return losses[0], losses[1]

    def actor_loss_and_grads(self, states: np.ndarray, eps: np.ndarray) -> Tuple[float, Gradients, np.ndarray]:
        """
        J_π = mean(α log π(a|s) − min Q(s, a)) 와 actor 파라미터 기울기 (고정된 ε)

        Args:
            states: 정규화된 상태 (B, d)
            eps: 표준정규 잡음 (B, K)

        Returns:
            (J_π, Gradients, log π (B,))
        """
        batch_size = states.shape[0]
        bound = self.hyper.action_bound
        alpha = self.alpha

        mu, log_std, raw_log_std, cache = self.policy(states)
        std = np.exp(log_std)
        u = mu + eps * std
        tanh_u = np.tanh(u)
        action = bound * tanh_u
        log_probs = squashed_log_prob(u, mu, log_std, bound)
        q, dq_da = self.q_value_and_action_grad(states, action)
        loss = float(np.mean(alpha * log_probs - q))

        # ∂log π/∂u = 2 tanh u, ∂a/∂u = a_max(1 − tanh²u)
        d_u = (alpha * 2.0 * tanh_u - dq_da * bound * (1.0 - tanh_u ** 2)) / batch_size
        d_mu = d_u
        d_log_std = -alpha / batch_size + d_u * eps * std
        in_range = (raw_log_std >= LOG_STD_MIN) & (raw_log_std <= LOG_STD_MAX)
        d_log_std = np.where(in_range, d_log_std, 0.0)

        grads = backward(self.actor, cache, np.hstack([d_mu, d_log_std]))
        return loss, grads, log_probs

    def actor_update_sac(self, batch: TransitionBatch) -> float:
        """
        액터 Adam 하강 한 step

        Returns:
            갱신 전 J_π
        """
        states = self.normalizer.transform(batch.states)
        eps = self.rng.standard_normal((len(batch), self.action_dim))
        loss, grads, log_probs = self.actor_loss_and_grads(states, eps)
        adam_step(self.actor, grads, self.actor_opt)
        self._last_log_probs = log_probs
        return loss

    def temperature_update(
        self,
        batch: Optional[TransitionBatch] = None,
        log_probs: Optional[np.ndarray] = None
    ) -> float:
        """
        log α 에 대한 Adam 한 step: J(α) = mean(−α(log π + H̄))

        log_probs 가 없으면 직전 actor step 값, 그것도 없으면 batch 상태에서 샘플한다.

        Returns:
            새 α
        """
        if log_probs is None:
            log_probs = self._last_log_probs
        if log_probs is None:
            if batch is None:
                raise ValueError("온도 갱신에 필요한 log π 가 없음")
            _, log_probs = self.sample_action(self.normalizer.transform(batch.states), self.rng)
        grad = np.array([np.mean(-self.alpha * (log_probs + self.entropy_target))])
        adam_update([self.log_alpha], [grad], self.alpha_moments, self.alpha_opt)
        return self.alpha

    def update_targets(self):
        polyak_update(self.critic1_target, self.critic1, self.hyper.tau)
        polyak_update(self.critic2_target, self.critic2, self.hyper.tau)

    def learn(self, batch: TransitionBatch) -> Dict[str, float]:
        j_q1, j_q2 = self.critic_update_sac(batch)
        j_pi = self.actor_update_sac(batch)
        entropy = float(-np.mean(self._last_log_probs))
        alpha = self.temperature_update(log_probs=self._last_log_probs)
        self.update_targets()
        return {
            "critic_loss": 0.5 * (j_q1 + j_q2),
            "actor_obj": j_pi,
            "alpha": alpha,
            "entropy_estimate": entropy,
            "J_Q1": j_q1,
            "J_Q2": j_q2,
            "J_pi": j_pi,
        }

    def entropy_estimate(self, states: np.ndarray, samples: int = 32) -> float:
        """방문 상태들에서 −E[log π] 몬테카를로 추정 (에이전트 RNG 와 별도)"""
        rng = np.random.default_rng(0)
        x = self.normalizer.transform(states)
        log_probs = [self.sample_action(x, rng)[1] for _ in range(samples)]
        return float(-np.mean(log_probs))

    def extra_state(self) -> Dict[str, object]:
        return {
            "log_alpha": float(self.log_alpha[0]),
            "alpha_m": float(self.alpha_moments.m[0][0]),
            "alpha_v": float(self.alpha_moments.v[0][0]),
            "alpha_step": self.alpha_moments.step,
            "entropy_target": self.entropy_target,
        }

    def load_extra_state(self, data):
        if "log_alpha" in data:
            self.log_alpha = np.array([float(data["log_alpha"])])
            self.alpha_moments = AdamMoments(
                [np.array([float(data.get("alpha_m", 0.0))])],
                [np.array([float(data.get("alpha_v", 0.0))])],
                int(data.get("alpha_step", 0)),
            )
        if "entropy_target" in data:
            self.entropy_target = float(data["entropy_target"])
