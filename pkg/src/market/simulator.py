"""
합성 호가 시장 생성기 (static / sequential / quasi-dynamic)
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from config.settings import (
    DEFAULT_SHAPE,
    DEFAULT_SPREAD,
    DEFAULT_EPISODE_LENGTH,
    SPREAD_FLOOR,
    VOL_FLOOR,
    PSD_REPAIR_TOLERANCE
)
from src.calculator.volmodel import MoneynessGrid
from src.utils.exceptions import ConfigError
from src.utils.logger import setup_logger
from src.utils.validators import ConfigValidator

logger = setup_logger(__name__, "market.log")


class ScenarioKind(str, Enum):
    STATIC = "static"
    SEQUENTIAL = "sequential"
    QUASI_DYNAMIC = "quasi_dynamic"


class TemporalMode(str, Enum):
    IID = "iid"
    RANDOM_WALK = "random_walk"


# 형태별 mid 변동성 노트 (κ, mid). 노트 사이는 선형 보간.
SHAPE_TABLES: Dict[str, List[tuple]] = {
    "skew": [
        (-0.4, 0.360), (-0.3, 0.315), (-0.2, 0.280), (-0.1, 0.248), (0.0, 0.220),
        (0.1, 0.198), (0.2, 0.180), (0.3, 0.168), (0.4, 0.160),
    ],
    "high_smile": [
        (-0.4, 0.400), (-0.3, 0.330), (-0.2, 0.270), (-0.1, 0.225), (0.0, 0.210),
        (0.1, 0.225), (0.2, 0.270), (0.3, 0.330), (0.4, 0.400),
    ],
    "inverse_smile": [
        (-0.4, 0.140), (-0.3, 0.180), (-0.2, 0.210), (-0.1, 0.228), (0.0, 0.235),
        (0.1, 0.228), (0.2, 0.210), (0.3, 0.180), (0.4, 0.140),
    ],
}

# 코퓰러 프리셋: (mid 표준편차, 스프레드 평균, 스프레드 표준편차, mid 간 상관 감쇠, mid-스프레드 상관)
COPULA_PRESETS: Dict[str, tuple] = {
    "wide_spread_stock": (0.004, 0.020, 0.005, 0.90, 0.30),
    "tight_spread_stock": (0.002, 0.004, 0.001, 0.95, 0.20),
}


@dataclass(frozen=True)
class QuoteSlice:
    """
    한 시점의 bid/ask 내재변동성 호가

    Attributes:
        step: 시점 인덱스 t_i
        bid: 그리드 점별 bid 변동성
        ask: 그리드 점별 ask 변동성
    """

    step: int
    bid: np.ndarray
    ask: np.ndarray

    def __post_init__(self):
        bid = np.asarray(self.bid, dtype=np.float64)
        ask = np.asarray(self.ask, dtype=np.float64)
        object.__setattr__(self, "bid", bid)
        object.__setattr__(self, "ask", ask)
        is_valid, errors = ConfigValidator.validate_quotes(bid, ask)
        if not is_valid:
            raise ConfigError("; ".join(errors))

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.bid + self.ask)

    @property
    def spread(self) -> np.ndarray:
        return self.ask - self.bid

    @property
    def size(self) -> int:
        return int(self.bid.size)

    def with_step(self, step: int) -> "QuoteSlice":
        return QuoteSlice(step, self.bid, self.ask)


@dataclass
class CopulaParams:
    """
    quasi-dynamic 시장의 가우시안 코퓰러 파라미터

    Attributes:
        mid_means / mid_stds: 점별 mid 평균, 표준편차 (n)
        spread_means / spread_stds: 점별 스프레드 평균, 표준편차 (n)
        correlation: (2n × 2n) 상관행렬, 앞 n 개는 mid, 뒤 n 개는 스프레드
    """

    mid_means: np.ndarray
    mid_stds: np.ndarray
    spread_means: np.ndarray
    spread_stds: np.ndarray
    correlation: np.ndarray

    def __post_init__(self):
        self.mid_means = np.asarray(self.mid_means, dtype=np.float64)
        self.mid_stds = np.asarray(self.mid_stds, dtype=np.float64)
        self.spread_means = np.asarray(self.spread_means, dtype=np.float64)
        self.spread_stds = np.asarray(self.spread_stds, dtype=np.float64)
        self.correlation = np.asarray(self.correlation, dtype=np.float64)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mid_means": self.mid_means.tolist(),
            "mid_stds": self.mid_stds.tolist(),
            "spread_means": self.spread_means.tolist(),
            "spread_stds": self.spread_stds.tolist(),
            "correlation": self.correlation.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CopulaParams":
        try:
            return cls(
                mid_means=data["mid_means"],
                mid_stds=data["mid_stds"],
                spread_means=data["spread_means"],
                spread_stds=data["spread_stds"],
                correlation=data["correlation"],
            )
        except KeyError as e:
            raise ConfigError(f"코퓰러 파라미터 누락: {e}") from None


@dataclass
class MarketConfig:
    """시장 시나리오 설정"""

    kind: ScenarioKind = ScenarioKind.STATIC
    shape: str = DEFAULT_SHAPE
    grid: MoneynessGrid = field(default_factory=MoneynessGrid.default)
    episode_length: int = DEFAULT_EPISODE_LENGTH
    spread: float = DEFAULT_SPREAD
    custom_table: Optional[List[List[float]]] = None
    copula_preset: str = "wide_spread_stock"
    copula: Optional[CopulaParams] = None
    temporal_mode: TemporalMode = TemporalMode.IID
    spread_floor: float = SPREAD_FLOOR
    vol_floor: float = VOL_FLOOR

    def __post_init__(self):
        try:
            self.kind = ScenarioKind(self.kind)
            self.temporal_mode = TemporalMode(self.temporal_mode)
        except ValueError as e:
            raise ConfigError(f"잘못된 시장 설정: {e}") from None
        is_valid, errors = ConfigValidator.validate_market(self)
        if not is_valid:
            raise ConfigError("; ".join(errors))
        if self.kind is ScenarioKind.QUASI_DYNAMIC and self.copula is None:
            self.copula = copula_preset(self.copula_preset, self.grid, self.shape, self.custom_table)

    @property
    def steps_per_episode(self) -> int:
        """에피소드당 step 수 (static 은 1)"""
        return 1 if self.kind is ScenarioKind.STATIC else self.episode_length

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "shape": self.shape,
            "grid": self.grid.to_dict(),
            "episode_length": self.episode_length,
            "spread": self.spread,
            "custom_table": self.custom_table,
            "copula_preset": self.copula_preset,
            "copula": self.copula.to_dict() if self.copula is not None else None,
            "temporal_mode": self.temporal_mode.value,
            "spread_floor": self.spread_floor,
            "vol_floor": self.vol_floor,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MarketConfig":
        copula = data.get("copula")
        return cls(
            kind=data.get("kind", ScenarioKind.STATIC.value),
            shape=data.get("shape", DEFAULT_SHAPE),
            grid=MoneynessGrid.from_dict(data.get("grid", {})),
            episode_length=int(data.get("episode_length", DEFAULT_EPISODE_LENGTH)),
            spread=float(data.get("spread", DEFAULT_SPREAD)),
            custom_table=data.get("custom_table"),
            copula_preset=data.get("copula_preset", "wide_spread_stock"),
            copula=CopulaParams.from_dict(copula) if copula else None,
            temporal_mode=data.get("temporal_mode", TemporalMode.IID.value),
            spread_floor=float(data.get("spread_floor", SPREAD_FLOOR)),
            vol_floor=float(data.get("vol_floor", VOL_FLOOR)),
        )


def shape_mids(shape: str, grid: MoneynessGrid, custom_table: Optional[Sequence] = None) -> np.ndarray:
    """
    형태 테이블에서 그리드 점별 mid 변동성 계산

    Args:
        shape: skew | high_smile | inverse_smile | custom
        grid: 머니니스 그리드
        custom_table: custom 형태의 (κ, mid) 노트 목록

    Returns:
        mid 변동성 배열 (n)

    Raises:
        ConfigError: 알 수 없는 형태 또는 custom 테이블 누락
    """
    if shape == "custom":
        if not custom_table:
            raise ConfigError("custom 형태에는 custom_table 이 필요함")
        table = sorted((float(k), float(v)) for k, v in custom_table)
    elif shape in SHAPE_TABLES:
        table = SHAPE_TABLES[shape]
    else:
        raise ConfigError(f"알 수 없는 시장 형태: {shape}")

    knots = np.array([k for k, _ in table])
    values = np.array([v for _, v in table])
    return np.interp(grid.array, knots, values)


def copula_preset(
    name: str,
    grid: MoneynessGrid,
    shape: str = DEFAULT_SHAPE,
    custom_table: Optional[Sequence] = None
) -> CopulaParams:
    """
    이름이 붙은 코퓰러 프리셋 생성

    mid 평균은 시장 형태 테이블을 따르고, 상관행렬은
    [[1, c], [c, 1]] ⊗ (ρ^|i−j|) 크로네커 곱 (단위 대각, PSD).
    """
    if name not in COPULA_PRESETS:
        raise ConfigError(f"알 수 없는 코퓰러 프리셋: {name} (custom 은 copula 필드로 지정)")
    mid_std, spread_mean, spread_std, decay, cross = COPULA_PRESETS[name]
    n = grid.size
    idx = np.arange(n)
    point_corr = decay ** np.abs(idx[:, None] - idx[None, :])
    block = np.array([[1.0, cross], [cross, 1.0]])
    return CopulaParams(
        mid_means=shape_mids(shape, grid, custom_table),
        mid_stds=np.full(n, mid_std),
        spread_means=np.full(n, spread_mean),
        spread_stds=np.full(n, spread_std),
        correlation=np.kron(block, point_corr),
    )


def correlation_factor(correlation: np.ndarray, tolerance: float = PSD_REPAIR_TOLERANCE) -> np.ndarray:
    """
    상관행렬의 인수 L (L·Lᵀ = Σ⁺)

    음의 고유값은 0 으로 자른다. 허용치보다 더 음수면 설정 오류.

    Raises:
        ConfigError: 비대칭, 단위 대각 아님, 또는 보정 불가능한 비 PSD
    """
    corr = np.asarray(correlation, dtype=np.float64)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ConfigError(f"상관행렬은 정방행렬이어야 함: {corr.shape}")
    if not np.allclose(corr, corr.T, atol=1e-10):
        raise ConfigError("상관행렬이 대칭이 아님")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-10):
        raise ConfigError("상관행렬 대각 원소가 1 이 아님")

    eigenvals, eigenvecs = np.linalg.eigh(corr)
    if eigenvals.min() < -tolerance:
        raise ConfigError(f"상관행렬이 PSD 가 아님 (최소 고유값 {eigenvals.min():.3e})")
    if eigenvals.min() < 0.0:
        logger.warning(f"상관행렬 고유값 보정: 최소 고유값 {eigenvals.min():.3e} → 0")
    eigenvals = np.maximum(eigenvals, 0.0)
    return eigenvecs * np.sqrt(eigenvals)


def gen_static(config: MarketConfig) -> QuoteSlice:
    """
    static / sequential 시장의 고정 호가 슬라이스

    Args:
        config: 시장 설정

    Returns:
        step 0 의 QuoteSlice (ask − bid = 설정 스프레드)
    """
    if config.kind is ScenarioKind.QUASI_DYNAMIC:
        raise ConfigError("gen_static 은 static/sequential 시나리오 전용")
    mids = shape_mids(config.shape, config.grid, config.custom_table)
    half = 0.5 * config.spread
    return QuoteSlice(0, mids - half, mids + half)


def step_quasi_dynamic(
    config: MarketConfig,
    rng: np.random.Generator,
    prev: Optional[QuoteSlice] = None,
    factor: Optional[np.ndarray] = None
) -> QuoteSlice:
    """
    코퓰러 과정에서 다음 호가 슬라이스 추출

    z ~ N(0, Σ);  mid_j = μ_j + std_j·z_j,  spread_j = max(μ^spr_j + std^spr_j·z_{n+j}, floor)
    random_walk 모드에서는 mid 의 기준이 μ 대신 직전 mid.

    Args:
        config: quasi-dynamic 시장 설정
        rng: 난수 생성기 (호출자가 소유)
        prev: 직전 슬라이스 (없으면 첫 step)
        factor: 미리 계산한 상관행렬 인수 (없으면 계산)

    Returns:
        새 QuoteSlice
    """
    copula = config.copula
    if copula is None:
        raise ConfigError("quasi-dynamic 시장에 코퓰러 파라미터가 없음")
    n = config.grid.size
    if factor is None:
        factor = correlation_factor(copula.correlation)

    z = factor @ rng.standard_normal(2 * n)

    if config.temporal_mode is TemporalMode.RANDOM_WALK and prev is not None:
        center = prev.mid
    else:
        center = copula.mid_means
    mids = np.maximum(center + copula.mid_stds * z[:n], config.vol_floor)
    spreads = np.maximum(copula.spread_means + copula.spread_stds * z[n:], config.spread_floor)
    # bid > 0 유지: 스프레드는 mid 를 넘지 않음
    spreads = np.minimum(spreads, mids)

    step = 0 if prev is None else prev.step + 1
    return QuoteSlice(step, mids - 0.5 * spreads, mids + 0.5 * spreads)


class MarketSimulator:
    """에피소드 단위 호가 경로 생성기 (RNG 를 소유, 워커 간 공유 금지)"""

    def __init__(self, config: MarketConfig, seed: Optional[int] = None):
        """
        초기화

        Args:
            config: 시장 설정
            seed: 난수 시드
        """
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.current: Optional[QuoteSlice] = None
        self._factor = None
        self._static_slice = None

        if config.kind is ScenarioKind.QUASI_DYNAMIC:
            self._factor = correlation_factor(config.copula.correlation)
        else:
            self._static_slice = gen_static(config)

    def reseed(self, seed: Optional[int]):
        """난수 스트림 재설정"""
        self.rng = np.random.default_rng(seed)

    def reset(self) -> QuoteSlice:
        """에피소드 첫 슬라이스"""
        if self.config.kind is ScenarioKind.QUASI_DYNAMIC:
            self.current = step_quasi_dynamic(self.config, self.rng, None, self._factor)
        else:
            self.current = self._static_slice
        return self.current

    def advance(self) -> QuoteSlice:
        """다음 시점 슬라이스 (static/sequential 은 호가 불변)"""
        if self.current is None:
            return self.reset()
        if self.config.kind is ScenarioKind.QUASI_DYNAMIC:
            self.current = step_quasi_dynamic(self.config, self.rng, self.current, self._factor)
        else:
            self.current = self._static_slice.with_step(self.current.step + 1)
        return self.current

    def simulate_episode(self) -> List[QuoteSlice]:
        """
        한 에피소드 분량의 호가 경로

        Returns:
            static 은 1 개, 그 외 episode_length 개의 슬라이스
        """
        slices = [self.reset()]
        for _ in range(self.config.steps_per_episode - 1):
            slices.append(self.advance())
        logger.debug(f"호가 경로 생성: {len(slices)}개 슬라이스 ({self.config.kind.value})")
        return slices
