"""
실험 파이프라인: 학습 (하이퍼파라미터 선택) → 검증 (최선 에이전트 선택) → 테스트

시드와 그리드 조합은 독립 워커에서 실행하고 결과는 입력 순서대로 합친다.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config.settings import EVAL_SEED_OFFSET, N_PARAMS, REWARD_THRESHOLD_FACTOR
from src.agents.base import BaseAgent, EpisodeLog, EvaluationResult
from src.agents.ddpg import DdpgAgent
from src.agents.sac import SacAgent
from src.calculator.bench import benchmark_fit
from src.calculator.volmodel import eval_slice
from src.harness.config import ExperimentConfig, HyperParams
from src.market.env import VolFittingEnv
from src.market.simulator import MarketSimulator, ScenarioKind, gen_static
from src.reporter.gap_alerts import FAIL, PASS, GapAlertSystem
from src.utils.exceptions import CheckpointError, ConfigError
from src.utils.helpers import cumulative_mean, trimmed_mean
from src.utils.logger import setup_logger
from src.utils.validators import ConfigValidator

logger = setup_logger(__name__, "pipeline.log")

AGENT_CLASSES = {
    "ddpg": DdpgAgent,
    "sac": SacAgent,
}


@dataclass
class SeedRun:
    """시드 하나의 학습 결과"""

    seed: int
    overrides: Dict[str, Any]
    eval_episodes: List[int]
    eval_rewards: List[float]
    final_eval_reward: float
    logs: List[EpisodeLog]
    trace_rows: List[Dict[str, Any]]
    checkpoint: Dict[str, Any]

    @property
    def best_det_reward(self) -> float:
        return max(log.best_det_reward for log in self.logs)


@dataclass
class TupleResult:
    """
    하이퍼파라미터 조합 하나의 결과

    Attributes:
        trimmed_curve: 평가 시점별 시드 절사 평균 (EvalSummary)
        cumulative_curve: trimmed_curve 의 누적 평균
        score: 누적 평균 곡선의 마지막 값
    """

    index: int
    overrides: Dict[str, Any]
    hyper: HyperParams
    runs: List[SeedRun]
    trimmed_curve: List[float]
    cumulative_curve: List[float]
    score: float

    @property
    def best_trimmed(self) -> float:
        return max(self.trimmed_curve)


@dataclass
class TrainingResult:
    """학습 단계 결과"""

    tuples: List[TupleResult]
    best_index: int
    threshold: float
    reward_threshold: Optional[float]

    @property
    def best(self) -> TupleResult:
        return self.tuples[self.best_index]

    @property
    def best_overrides(self) -> Dict[str, Any]:
        return self.best.overrides


@dataclass
class AgentCandidate:
    seed: int
    mean_reward: float
    successful: bool


@dataclass
class ValidationResult:
    """검증 단계 결과 (성공 에이전트가 없으면 best_index 가 None)"""

    threshold: float
    candidates: List[AgentCandidate]
    best_index: Optional[int] = None
    best_checkpoint: Optional[Dict[str, Any]] = None
    runs: List[SeedRun] = field(default_factory=list)

    @property
    def has_candidate(self) -> bool:
        return self.best_index is not None

    @property
    def failures(self) -> List[AgentCandidate]:
        return [c for c in self.candidates if not c.successful]


@dataclass
class TestReport:
    """테스트 단계 결과"""

    steps: List[Dict[str, Any]]
    smiles: List[Dict[str, Any]]
    alerts: List[Dict[str, Any]]
    tolerance: float

    def summary(self) -> List[Dict[str, Any]]:
        """테스트 시드별 평균 보상과 PASS/FAIL 개수"""
        rows = []
        for seed in sorted({row["seed"] for row in self.steps}):
            seed_rows = [row for row in self.steps if row["seed"] == seed]
            rows.append({
                "seed": seed,
                "steps": len(seed_rows),
                "agent_mean": float(np.mean([r["agent_reward"] for r in seed_rows])),
                "bench_mean": float(np.mean([r["bench_reward"] for r in seed_rows])),
                "max_gap": float(max(r["gap"] for r in seed_rows)),
                "pass": sum(r["status"] == PASS for r in seed_rows),
                "fail": sum(r["status"] == FAIL for r in seed_rows),
            })
        return rows

    @property
    def passed(self) -> bool:
        return all(row["status"] == PASS for row in self.steps)


def build_env(config: ExperimentConfig, hyper: HyperParams, seed: Optional[int]) -> VolFittingEnv:
    return VolFittingEnv(
        config.market,
        config.reward_kind,
        config.param_form,
        seed=seed,
        flat_level=hyper.flat_level,
        action_bound=hyper.action_bound,
    )


def build_agent(
    config: ExperimentConfig,
    hyper: HyperParams,
    seed: int,
    reward_threshold: Optional[float]
) -> BaseAgent:
    """설정의 알고리즘으로 에이전트 생성"""
    is_valid, errors = ConfigValidator.validate_hyperparams(hyper)
    if not is_valid:
        raise ConfigError("; ".join(errors))
    state_dim = 2 * config.market.grid.size + N_PARAMS
    return AGENT_CLASSES[config.algorithm](
        state_dim=state_dim,
        hyper=hyper,
        seed=seed,
        scenario=config.scenario,
        reward_threshold=reward_threshold,
    )


def reference_threshold(config: ExperimentConfig) -> float:
    """
    R_0: 설정값이 있으면 그대로, 없으면 벤치마크 보상 × 1.1

    quasi-dynamic 은 기준 에피소드 (첫 학습 시드의 평가 경로) 의 step 평균 벤치마크 보상을 쓴다.
    """
    if config.reward_threshold is not None:
        return float(config.reward_threshold)

    market = config.market
    if market.kind is ScenarioKind.QUASI_DYNAMIC:
        simulator = MarketSimulator(market, seed=config.seeds[0] + EVAL_SEED_OFFSET)
        rewards = [
            benchmark_fit(quotes, market.grid, config.reward_kind, config.param_form).reward
            for quotes in simulator.simulate_episode()
        ]
        bench = float(np.mean(rewards))
    else:
        bench = benchmark_fit(gen_static(market), market.grid, config.reward_kind, config.param_form).reward

    threshold = REWARD_THRESHOLD_FACTOR * bench
    logger.info(f"R_0 = {REWARD_THRESHOLD_FACTOR} × 벤치마크 {bench:.6e} = {threshold:.6e}")
    return threshold


def train_seed(
    config: ExperimentConfig,
    hyper: HyperParams,
    seed: int,
    reward_threshold: Optional[float],
    overrides: Optional[Dict[str, Any]] = None
) -> SeedRun:
    """
    시드 하나로 에이전트 학습

    eval_every 에피소드마다 평가 에피소드를 돌린다. 평가 환경은 매번 같은 시드로
    재설정되므로 평가 시점 간 비교가 가능하고 학습 RNG 는 건드리지 않는다.

    Args:
        config: 실험 설정
        hyper: 하이퍼파라미터
        seed: 에이전트 / 학습 환경 시드
        reward_threshold: R_0
        overrides: 그리드 조합 (기록용)

    Returns:
        SeedRun
    """
    agent = build_agent(config, hyper, seed, reward_threshold)
    env = build_env(config, hyper, seed)
    eval_seed = seed + EVAL_SEED_OFFSET
    eval_env = build_env(config, hyper, eval_seed)

    def evaluate() -> EvaluationResult:
        eval_env.reseed(eval_seed)
        return agent.evaluate_episode(eval_env)

    logs: List[EpisodeLog] = []
    trace_rows: List[Dict[str, Any]] = []
    eval_episodes: List[int] = []
    eval_rewards: List[float] = []

    for n in range(config.episodes):
        log = agent.train_episode(env, n, config.episodes)
        logs.append(log)
        for record in log.steps:
            row = record.to_row()
            row["seed"] = seed
            trace_rows.append(row)

        if (n + 1) % config.eval_every == 0:
            result = evaluate()
            eval_episodes.append(n + 1)
            eval_rewards.append(result.mean_reward)
            agent.update_learning_flag_from_evaluation(result.mean_reward)
            logger.debug(
                f"seed {seed} 에피소드 {n + 1}: 평가 평균 {result.mean_reward:.6e}, "
                f"LearningFlag={agent.learning_flag}"
            )

    final_eval = evaluate().mean_reward
    logger.info(
        f"시드 {seed} 학습 완료 - 에피소드 {config.episodes}, 갱신 {agent.updates}회, "
        f"최종 평가 {final_eval:.6e}"
    )
    return SeedRun(
        seed=seed,
        overrides=dict(overrides or {}),
        eval_episodes=eval_episodes,
        eval_rewards=eval_rewards,
        final_eval_reward=final_eval,
        logs=logs,
        trace_rows=trace_rows,
        checkpoint=agent.to_checkpoint(),
    )


def _train_seed_job(args: Tuple) -> SeedRun:
    return train_seed(*args)


def _run_jobs(config: ExperimentConfig, jobs: List[Tuple]) -> List[SeedRun]:
    """워커 풀 실행 (결과는 jobs 순서)"""
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            return list(executor.map(_train_seed_job, jobs))
    return [_train_seed_job(job) for job in jobs]


def evaluation_curve(runs: List[SeedRun], excluded_quantile: float) -> List[float]:
    """
    평가 시점별 시드 절사 평균 (하위 분위 시드 제외)

    Returns:
        평가 시점 수 길이의 목록
    """
    if not runs or not runs[0].eval_rewards:
        return [float(np.mean([run.final_eval_reward for run in runs]))] if runs else []
    matrix = np.array([run.eval_rewards for run in runs])
    return [trimmed_mean(matrix[:, j], excluded_quantile) for j in range(matrix.shape[1])]


def run_training(config: ExperimentConfig, reward_threshold: Optional[float] = None) -> TrainingResult:
    """
    학습 단계: 그리드 조합마다 시드별 학습, 평가 절사 평균으로 점수화

    점수는 누적 평균 곡선의 마지막 값이고 동점이면 앞선 조합이 이긴다.
    정지 임계값은 승자 조합의 최고 절사 평균 평가 보상이다.

    Args:
        config: 실험 설정
        reward_threshold: R_0 (없으면 reference_threshold)

    Returns:
        TrainingResult

    Raises:
        ConfigError: 빈 하이퍼파라미터 그리드
    """
    grid = config.hyper_tuples()
    if not grid:
        raise ConfigError("하이퍼파라미터 그리드가 비어 있음")
    if reward_threshold is None:
        reward_threshold = reference_threshold(config)

    logger.info(
        f"학습 단계 시작 - {config.algorithm}, {config.scenario.value}, "
        f"조합 {len(grid)}개 × 시드 {len(config.seeds)}개, 에피소드 {config.episodes}"
    )

    tuples: List[TupleResult] = []
    for index, overrides in enumerate(grid):
        hyper = config.hyper.with_overrides(overrides)
        jobs = [(config, hyper, seed, reward_threshold, overrides) for seed in config.seeds]
        runs = _run_jobs(config, jobs)
        curve = evaluation_curve(runs, config.trim_quantile)
        cumulative = cumulative_mean(curve)
        tuples.append(TupleResult(index, overrides, hyper, runs, curve, cumulative, cumulative[-1]))
        logger.info(f"조합 {index} {overrides}: 점수 {cumulative[-1]:.6e}, 최고 절사 평균 {max(curve):.6e}")

    best_index = 0
    for i, result in enumerate(tuples):
        if result.score > tuples[best_index].score:
            best_index = i
    threshold = tuples[best_index].best_trimmed
    logger.info(f"학습 단계 완료 - 최선 조합 {best_index} {grid[best_index]}, 정지 임계값 {threshold:.6e}")
    return TrainingResult(tuples, best_index, threshold, reward_threshold)


def run_validation(
    config: ExperimentConfig,
    overrides: Dict[str, Any],
    threshold: float
) -> ValidationResult:
    """
    검증 단계: 서로 다른 시드로 에이전트 여러 개를 학습하고 최선 에이전트 선택

    학습 단계 임계값이 검증 에이전트의 LearningFlag 정지 임계값(R_0) 이자 성공
    기준이다. 유한하지 않은 임계값이면 LearningFlag 를 끄지 않는다.
    최종 평가 평균 보상이 threshold 이상이면 성공. 성공 에이전트 중 평균 보상이
    가장 큰 것을 고르고 동점이면 앞선 인덱스가 이긴다.

    Args:
        config: 실험 설정
        overrides: 학습 단계 최선 조합
        threshold: 학습 단계 임계값

    Returns:
        ValidationResult (성공 에이전트가 없으면 has_candidate == False)
    """
    stop_threshold = float(threshold) if np.isfinite(threshold) else None
    hyper = config.hyper.with_overrides(overrides)
    seeds = config.agent_seeds()
    logger.info(f"검증 단계 시작 - 에이전트 {len(seeds)}개, 임계값 {threshold:.6e}")

    runs = _run_jobs(config, [(config, hyper, seed, stop_threshold, overrides) for seed in seeds])
    candidates = [
        AgentCandidate(run.seed, run.final_eval_reward, run.final_eval_reward >= threshold)
        for run in runs
    ]

    best_index = None
    for i, candidate in enumerate(candidates):
        if not candidate.successful:
            logger.warning(
                f"에이전트 {i} (seed {candidate.seed}) 임계값 미달: {candidate.mean_reward:.6e} < {threshold:.6e}"
            )
            continue
        if best_index is None or candidate.mean_reward > candidates[best_index].mean_reward:
            best_index = i

    if best_index is None:
        logger.warning("검증 단계: 임계값을 넘는 에이전트 없음")
        return ValidationResult(threshold, candidates, runs=runs)

    logger.info(
        f"검증 단계 완료 - 에이전트 {best_index} (seed {candidates[best_index].seed}), "
        f"평균 보상 {candidates[best_index].mean_reward:.6e}"
    )
    return ValidationResult(threshold, candidates, best_index, runs[best_index].checkpoint, runs)


def load_agent(checkpoint: Dict[str, Any]) -> BaseAgent:
    """
    체크포인트에서 에이전트 복원

    Raises:
        CheckpointError: 알 수 없는 알고리즘 또는 손상된 체크포인트
    """
    algorithm = checkpoint.get("algorithm")
    if algorithm not in AGENT_CLASSES:
        raise CheckpointError(f"알 수 없는 알고리즘: {algorithm}")
    return AGENT_CLASSES[algorithm].from_checkpoint(checkpoint)


def run_testing(checkpoint: Dict[str, Any], config: ExperimentConfig) -> TestReport:
    """
    테스트 단계: 테스트 시드별 결정적 에피소드, step 별 벤치마크 비교

    Args:
        checkpoint: 최선 에이전트 체크포인트
        config: 실험 설정

    Returns:
        TestReport

    Raises:
        CheckpointError: 체크포인트와 설정의 차원 불일치
    """
    agent = load_agent(checkpoint)
    grid = config.market.grid
    alerts = GapAlertSystem(config.gap_tolerance)
    steps: List[Dict[str, Any]] = []
    smiles: List[Dict[str, Any]] = []

    for seed in config.test_seeds:
        env = build_env(config, agent.hyper, seed)
        if env.state_dim != agent.state_dim:
            raise CheckpointError(f"상태 차원 불일치: 체크포인트 {agent.state_dim}, 설정 {env.state_dim}")

        state = env.reset()
        done = False
        while not done:
            quotes = env.quotes
            result = env.step(agent.deterministic_action(state))
            bench = benchmark_fit(quotes, grid, config.reward_kind, config.param_form)
            steps.append({
                "seed": seed,
                "step": result.state.step,
                "agent_reward": result.reward,
                "bench_reward": bench.reward,
            })
            model_vol = eval_slice(result.info["theta"], grid, config.param_form)
            bench_vol = eval_slice(bench.theta, grid, config.param_form)
            for j, kappa in enumerate(grid.kappas):
                smiles.append({
                    "seed": seed,
                    "step": result.state.step,
                    "kappa": kappa,
                    "mid": float(quotes.mid[j]),
                    "model_vol": float(model_vol[j]),
                    "bench_vol": float(bench_vol[j]),
                })
            state = result.state
            done = result.done

    found = alerts.check_gaps(steps)
    logger.info(f"테스트 단계 완료 - 시드 {len(config.test_seeds)}개, {len(steps)} step, FAIL {len(found)}건")
    return TestReport(steps, smiles, found, config.gap_tolerance)


def trailing_window_smile(
    logs: List[EpisodeLog],
    window: int,
    config: ExperimentConfig
) -> List[Dict[str, Any]]:
    """
    최근 window 개 에피소드의 최선 응답과 평균 슬라이스

    최선 응답은 마지막 step 결정적 보상이 가장 큰 에피소드의 θ,
    평균 슬라이스는 각 에피소드 마지막 결정적 θ 슬라이스의 평균이다.

    Returns:
        kappa, mid, best_vol, mean_vol 행 목록
    """
    if not logs:
        return []
    recent = logs[-window:]
    grid = config.market.grid
    best = max(recent, key=lambda log: log.det_rewards[-1])
    best_vol = eval_slice(best.final_det_theta, grid, config.param_form)
    slices = eval_slice(np.stack([log.final_det_theta for log in recent]), grid, config.param_form)
    mean_vol = np.mean(slices, axis=0)

    if config.market.kind is ScenarioKind.QUASI_DYNAMIC:
        mids = config.market.copula.mid_means
    else:
        mids = gen_static(config.market).mid
    return [
        {"kappa": kappa, "mid": float(mids[j]), "best_vol": float(best_vol[j]), "mean_vol": float(mean_vol[j])}
        for j, kappa in enumerate(grid.kappas)
    ]
