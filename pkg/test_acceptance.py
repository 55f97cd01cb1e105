"""
장시간 학습 인수 테스트 (pytest -m slow)

학습된 에이전트의 보상을 같은 호가에 대한 벤치마크 보상과 비교한다.
기본 실행에서는 pytest.ini 의 -m "not slow" 로 제외된다.
"""
from functools import lru_cache

import numpy as np
import pytest

from config.settings import BASE_DIR, EVAL_SEED_OFFSET
from src.calculator.bench import benchmark_fit
from src.harness.config import ExperimentConfig, load_config
from src.harness.pipeline import build_env, load_agent, run_testing, run_training, train_seed
from src.market.simulator import gen_static

pytestmark = pytest.mark.slow

SHAPES = ["skew", "high_smile", "inverse_smile"]
SEEDS = [0, 1, 2, 3, 4]
PRESETS_DIR = BASE_DIR / "data" / "presets"
QUASI_DYNAMIC_PRESETS = ["quasi_dynamic_wide_spread.json", "quasi_dynamic_tight_spread_sac.json"]

# (알고리즘, 보상) → static 허용 격차
STATIC_TOLERANCE = {
    ("ddpg", "mse"): 5e-3,
    ("sac", "mse"): 1e-2,
    ("ddpg", "bmse"): 1e-2,
    ("sac", "bmse"): 1e-2,
}
SEQUENTIAL_TOLERANCE = {"mse": 1.5e-2, "bmse": 1e-2}


def _experiment(algorithm, kind, shape, reward_kind="mse", **extra):
    data = {
        "algorithm": algorithm,
        "market": {"kind": kind, "shape": shape, "episode_length": 50},
        "reward_kind": reward_kind,
        "seeds": list(SEEDS),
        "workers": 1,
    }
    data.update(extra)
    return ExperimentConfig.from_dict(data)


def _bench_reward(config):
    return benchmark_fit(gen_static(config.market), config.market.grid, config.reward_kind, config.param_form).reward


def _final_evaluation(config, run):
    """학습된 에이전트의 결정적 평가 에피소드"""
    agent = load_agent(run.checkpoint)
    return agent.evaluate_episode(build_env(config, agent.hyper, run.seed + EVAL_SEED_OFFSET))


@lru_cache(maxsize=None)
def _trained_preset(name):
    """quasi-dynamic 프리셋 학습 결과 (같은 프리셋을 쓰는 테스트끼리 공유)"""
    config = load_config(PRESETS_DIR / name)
    return config, run_training(config)


@pytest.mark.parametrize("reward_kind", ["mse", "bmse"])
@pytest.mark.parametrize("algorithm", ["ddpg", "sac"])
@pytest.mark.parametrize("shape", SHAPES)
def test_static_close_to_benchmark(shape, algorithm, reward_kind):
    """static: 시드 평균 최선 결정적 보상이 벤치마크 허용 격차 이내"""
    config = _experiment(algorithm, "static", shape, reward_kind, episodes=2000, eval_every=50)
    bench = _bench_reward(config)
    rewards = [train_seed(config, config.hyper, seed, None).best_det_reward for seed in config.seeds]
    gap = abs(np.mean(rewards) - bench)
    print(f"📊 static {shape} {algorithm} {reward_kind}: 격차 {gap:.3e}")
    assert gap < STATIC_TOLERANCE[(algorithm, reward_kind)]


@pytest.mark.parametrize("reward_kind", ["mse", "bmse"])
@pytest.mark.parametrize("algorithm", ["ddpg", "sac"])
@pytest.mark.parametrize("shape", SHAPES)
def test_sequential_final_step_close_to_benchmark(shape, algorithm, reward_kind):
    """sequential 50 step: 마지막 step 보상이 벤치마크 근처, 첫 step 오차도 마지막의 2배 이내"""
    config = _experiment(algorithm, "sequential", shape, reward_kind, episodes=300, eval_every=10)
    bench = _bench_reward(config)

    first, final = [], []
    for seed in config.seeds:
        evaluation = _final_evaluation(config, train_seed(config, config.hyper, seed, None))
        assert len(evaluation.rewards) == 50
        first.append(evaluation.rewards[0])
        final.append(evaluation.rewards[-1])

    gap = abs(np.mean(final) - bench)
    print(f"📊 sequential {shape} {algorithm} {reward_kind}: 격차 {gap:.3e}")
    assert gap < SEQUENTIAL_TOLERANCE[reward_kind]
    assert abs(np.mean(first)) <= 2.0 * abs(np.mean(final))


@pytest.mark.parametrize("preset", QUASI_DYNAMIC_PRESETS)
def test_quasi_dynamic_tracks_benchmark(preset):
    """quasi-dynamic: 테스트 오차 크기 ≤ 1.25 × 벤치마크, 누적 평균 평가 곡선 후반부 비감소"""
    config, training = _trained_preset(preset)

    tail = np.asarray(training.best.cumulative_curve)
    tail = tail[len(tail) // 2:]
    assert np.all(np.diff(tail) >= -1e-3)

    best_run = max(training.best.runs, key=lambda run: run.final_eval_reward)
    report = run_testing(best_run.checkpoint, config)
    agent_mean = np.mean([row["agent_reward"] for row in report.steps])
    bench_mean = np.mean([row["bench_reward"] for row in report.steps])
    print(f"📊 {preset}: 에이전트 {agent_mean:.3e}, 벤치마크 {bench_mean:.3e}")
    assert bench_mean < 0.0
    assert agent_mean / bench_mean <= 1.25


def test_optimized_hypers_not_worse_than_defaults():
    """그리드 최선 조합의 평가 점수 ≥ 기본 하이퍼파라미터 조합"""
    config, training = _trained_preset(QUASI_DYNAMIC_PRESETS[0])
    defaults = {name: getattr(config.hyper, name) for name in config.hyper_grid}
    default_tuple = next(t for t in training.tuples if t.overrides == defaults)
    print(f"📊 기본 {default_tuple.score:.3e}, 최선 {training.best.score:.3e} {training.best_overrides}")
    assert training.best.score >= default_tuple.score


def test_sac_entropy_near_target():
    """학습된 static SAC 정책 엔트로피가 목표 −3 의 ±0.5 nats 이내"""
    config = _experiment("sac", "static", "high_smile", episodes=2000, eval_every=50)
    assert config.hyper.entropy_target == -3.0
    run = train_seed(config, config.hyper, SEEDS[0], None)
    agent = load_agent(run.checkpoint)
    state = build_env(config, agent.hyper, run.seed + EVAL_SEED_OFFSET).reset()
    entropy = agent.entropy_estimate(np.asarray([state.vector]), samples=256)
    print(f"📊 SAC 엔트로피 {entropy:.3f}")
    assert abs(entropy - config.hyper.entropy_target) <= 0.5


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("🏁 인수 테스트 (장시간)")
    print("=" * 60)
    pytest.main([__file__, "-v", "-m", "slow"])
