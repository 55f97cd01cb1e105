"""
실험 설정 (JSON ↔ dataclass)
"""
import itertools
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import (
    N_PARAMS,
    GAMMA,
    TAU,
    NOISE_SIGMA_MAX,
    NOISE_SIGMA_MIN,
    NOISE_DECAY_POWER,
    HIDDEN_UNITS,
    HIDDEN_LAYERS,
    ACTION_BOUND,
    FLAT_LEVEL,
    INITIAL_ALPHA,
    DDPG_DEFAULTS,
    SAC_DEFAULTS,
    DEFAULT_EPISODES,
    EVAL_EVERY,
    TRIM_QUANTILE,
    VALIDATION_AGENTS,
    TRAILING_WINDOW_STATIC,
    TRAILING_WINDOW_SEQUENTIAL,
    GAP_TOLERANCE,
    WORKERS,
    DEFAULT_REWARD_KIND,
    DEFAULT_PARAM_FORM
)
from src.calculator.rewards import RewardKind
from src.calculator.volmodel import ParamForm
from src.market.simulator import MarketConfig, ScenarioKind
from src.utils.exceptions import ConfigError
from src.utils.helpers import load_json
from src.utils.validators import ConfigValidator


@dataclass
class HyperParams:
    """에이전트 하이퍼파라미터 (기본값은 시나리오별 표 값)"""

    actor_lr: float = 0.0025
    critic_lr: float = 0.0025
    alpha_lr: float = 2.5e-4
    buffer_size: int = 1000
    batch_size: int = 64
    gamma: float = GAMMA
    tau: float = TAU
    sigma_max: float = NOISE_SIGMA_MAX
    sigma_min: float = NOISE_SIGMA_MIN
    noise_power: float = NOISE_DECAY_POWER
    noise_kind: str = "gaussian"
    hidden_units: int = HIDDEN_UNITS
    hidden_layers: int = HIDDEN_LAYERS
    action_bound: float = ACTION_BOUND
    flat_level: float = FLAT_LEVEL
    initial_alpha: float = INITIAL_ALPHA
    entropy_target: Optional[float] = None
    updates_per_step: int = 1
    reset_learning_flag_each_episode: bool = False

    @classmethod
    def defaults(cls, algorithm: str, scenario: str) -> "HyperParams":
        """
        알고리즘 / 시나리오별 기본값

        Args:
            algorithm: ddpg | sac
            scenario: static | sequential | quasi_dynamic

        Returns:
            HyperParams
        """
        table = DDPG_DEFAULTS if algorithm == "ddpg" else SAC_DEFAULTS
        actor_lr, critic_lr, buffer_size, batch_size = table[ScenarioKind(scenario).value]
        return cls(
            actor_lr=actor_lr,
            critic_lr=critic_lr,
            alpha_lr=critic_lr,
            buffer_size=buffer_size,
            batch_size=batch_size,
            entropy_target=-float(N_PARAMS) if algorithm == "sac" else None,
        )

    def with_overrides(self, overrides: Dict[str, Any]) -> "HyperParams":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"알 수 없는 하이퍼파라미터: {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ExperimentConfig:
    """실험 설정 (JSON 문서 하나와 대응)"""

    algorithm: str = "ddpg"
    market: MarketConfig = field(default_factory=MarketConfig)
    reward_kind: RewardKind = RewardKind(DEFAULT_REWARD_KIND)
    param_form: ParamForm = ParamForm(DEFAULT_PARAM_FORM)
    hyper: HyperParams = field(default_factory=HyperParams)
    hyper_grid: Dict[str, List[Any]] = field(default_factory=dict)
    episodes: int = DEFAULT_EPISODES
    eval_every: int = EVAL_EVERY
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    validation_agents: int = VALIDATION_AGENTS
    validation_seeds: Optional[List[int]] = None
    test_seeds: List[int] = field(default_factory=lambda: [1000])
    reward_threshold: Optional[float] = None
    trim_quantile: float = TRIM_QUANTILE
    trailing_window: Optional[int] = None
    gap_tolerance: float = GAP_TOLERANCE
    workers: int = WORKERS

    def __post_init__(self):
        self.algorithm = str(self.algorithm).lower()
        self.reward_kind = RewardKind.parse(self.reward_kind)
        try:
            self.param_form = ParamForm.parse(self.param_form)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.trailing_window is None:
            self.trailing_window = (
                TRAILING_WINDOW_STATIC if self.market.kind is ScenarioKind.STATIC
                else TRAILING_WINDOW_SEQUENTIAL
            )
        is_valid, errors = ConfigValidator.validate_experiment(self)
        if not is_valid:
            raise ConfigError("; ".join(errors))

    @property
    def scenario(self) -> ScenarioKind:
        return self.market.kind

    def agent_seeds(self) -> List[int]:
        """검증 단계 에이전트 시드 (지정 없으면 학습 시드 뒤에서 파생)"""
        if self.validation_seeds:
            return list(self.validation_seeds)
        base = max(self.seeds) + 1
        return [base + i for i in range(self.validation_agents)]

    def hyper_tuples(self) -> List[Dict[str, Any]]:
        """하이퍼파라미터 그리드의 모든 조합 (그리드가 없으면 기본값 하나)"""
        if not self.hyper_grid:
            return [{}]
        keys = list(self.hyper_grid.keys())
        values = [self.hyper_grid[key] for key in keys]
        return [dict(zip(keys, combo)) for combo in itertools.product(*values)]

    def with_base_seed(self, seed: int) -> "ExperimentConfig":
        """CLI --seed: 시드 목록을 seed 부터 연속 값으로 교체"""
        return replace(
            self,
            seeds=[seed + i for i in range(len(self.seeds))],
            validation_seeds=None,
            test_seeds=[seed + 1000 + i for i in range(len(self.test_seeds))],
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "market": self.market.to_dict(),
            "reward_kind": self.reward_kind.value,
            "param_form": self.param_form.value,
            "hyper": self.hyper.to_dict(),
            "hyper_grid": self.hyper_grid,
            "episodes": self.episodes,
            "eval_every": self.eval_every,
            "seeds": self.seeds,
            "validation_agents": self.validation_agents,
            "validation_seeds": self.validation_seeds,
            "test_seeds": self.test_seeds,
            "reward_threshold": self.reward_threshold,
            "trim_quantile": self.trim_quantile,
            "trailing_window": self.trailing_window,
            "gap_tolerance": self.gap_tolerance,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        JSON 사전에서 설정 생성 (누락 키는 기본값)

        Raises:
            ConfigError: 잘못된 값
        """
        algorithm = str(data.get("algorithm", "ddpg")).lower()
        market = MarketConfig.from_dict(data.get("market", {}))
        if algorithm not in ConfigValidator.VALID_ALGORITHMS:
            raise ConfigError(f"잘못된 알고리즘: {algorithm}")
        hyper = HyperParams.defaults(algorithm, market.kind.value).with_overrides(data.get("hyper", {}))

        defaults = cls.__dataclass_fields__
        kwargs = {}
        for name in [
            "hyper_grid", "episodes", "eval_every", "seeds", "validation_agents", "validation_seeds",
            "test_seeds", "reward_threshold", "trim_quantile", "trailing_window", "gap_tolerance", "workers",
        ]:
            if name in data:
                kwargs[name] = data[name]
        return cls(
            algorithm=algorithm,
            market=market,
            reward_kind=data.get("reward_kind", defaults["reward_kind"].default),
            param_form=data.get("param_form", defaults["param_form"].default),
            hyper=hyper,
            **kwargs,
        )


def load_config(filepath: Path) -> ExperimentConfig:
    """
    JSON 설정 파일 로드

    Raises:
        ConfigError: 파일이 없거나 JSON 이 아님
    """
    data = load_json(Path(filepath))
    if data is None:
        raise ConfigError(f"설정 파일을 읽을 수 없음: {filepath}")
    if not isinstance(data, dict):
        raise ConfigError(f"설정 파일 최상위는 객체여야 함: {filepath}")
    return ExperimentConfig.from_dict(data)
