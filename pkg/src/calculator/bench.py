"""
고전 최적화 벤치마크 (Nelder-Mead) 및 격자 탐색 오라클
"""
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from config.settings import (
    FLAT_LEVEL,
    BENCH_RESTARTS,
    BENCH_MAX_EVALUATIONS,
    BENCH_SIMPLEX_TOLERANCE
)
from src.calculator.rewards import RewardKind, fit_error
from src.calculator.volmodel import MoneynessGrid, ParamForm, flat_theta
from src.market.simulator import QuoteSlice
from src.utils.logger import setup_logger

logger = setup_logger(__name__, "bench.log")

# 재시작 점: flat prior 주변 상자의 꼭짓점 (계수별 오프셋)
RESTART_OFFSETS = {
    ParamForm.QUADRATIC: (0.05, 0.2, 0.5),
    ParamForm.SVI_REDUCED: (0.02, 0.1, 0.5),
}

# 격자 오라클 기본 탐색 상자
ORACLE_BOUNDS = {
    ParamForm.QUADRATIC: ((0.0, 0.5), (-1.0, 1.0), (-2.0, 2.0)),
    ParamForm.SVI_REDUCED: ((0.0, 0.2), (0.0, 1.0), (-1.0, 1.0)),
}


@dataclass
class BenchmarkResult:
    """벤치마크 피팅 결과"""

    theta: np.ndarray
    reward: float
    evaluations: int
    restarts: int


def restart_points(grid: MoneynessGrid, form: Union[str, ParamForm]) -> List[np.ndarray]:
    """고정된 결정적 재시작 점 8 개"""
    form = ParamForm.parse(form)
    center = flat_theta(FLAT_LEVEL, form, grid)
    offsets = np.asarray(RESTART_OFFSETS[form])
    points = []
    for signs in itertools.product((-1.0, 1.0), repeat=3):
        points.append(center + np.asarray(signs) * offsets)
    return points[:BENCH_RESTARTS]


def benchmark_fit(
    quotes: QuoteSlice,
    grid: MoneynessGrid,
    kind: Union[str, RewardKind] = RewardKind.MSE,
    form: Union[str, ParamForm] = ParamForm.QUADRATIC
) -> BenchmarkResult:
    """
    ξ(θ) 직접 최소화 (Nelder-Mead, 결정적 재시작)

    심플렉스 지름 < 1e-10 또는 평가 5000 회에서 종료. 항상 최선값을 반환한다.

    Args:
        quotes: 호가 슬라이스
        grid: 머니니스 그리드
        kind: 보상 종류
        form: 파라미터 형식

    Returns:
        BenchmarkResult (θ*, reward = −ξ(θ*), 총 평가 횟수)
    """
    form = ParamForm.parse(form)
    kind = RewardKind.parse(kind)

    def objective(theta: np.ndarray) -> float:
        return fit_error(theta, quotes, grid, kind, form)

    best_theta = None
    best_error = np.inf
    evaluations = 0

    for start in restart_points(grid, form):
        result = minimize(
            objective,
            x0=start,
            method="Nelder-Mead",
            options={
                "xatol": BENCH_SIMPLEX_TOLERANCE,
                "fatol": np.inf,
                "maxfev": BENCH_MAX_EVALUATIONS,
                "maxiter": BENCH_MAX_EVALUATIONS,
            },
        )
        evaluations += int(result.nfev)
        if result.fun < best_error:
            best_error = float(result.fun)
            best_theta = np.asarray(result.x, dtype=np.float64)

    logger.debug(
        f"벤치마크 피팅 완료 - θ*={np.round(best_theta, 6).tolist()}, "
        f"reward={-best_error:.6e}, 평가 {evaluations}회"
    )
    return BenchmarkResult(best_theta, -best_error, evaluations, BENCH_RESTARTS)


def grid_oracle(
    quotes: QuoteSlice,
    grid: MoneynessGrid,
    kind: Union[str, RewardKind] = RewardKind.MSE,
    form: Union[str, ParamForm] = ParamForm.QUADRATIC,
    resolution: int = 50,
    bounds: Optional[Sequence[Tuple[float, float]]] = None,
    chunk_size: int = 20000
) -> Tuple[float, np.ndarray]:
    """
    θ 상자 격자 전수 평가 (벤치마크 검증용 오라클)

    Args:
        quotes: 호가 슬라이스
        grid: 머니니스 그리드
        kind: 보상 종류
        form: 파라미터 형식
        resolution: 축별 격자 점 수 (≥ 10)
        bounds: 축별 (하한, 상한), 기본은 형식별 상자
        chunk_size: 한 번에 평가할 θ 개수

    Returns:
        (격자 최선 보상, 해당 θ)
    """
    form = ParamForm.parse(form)
    if resolution < 10:
        raise ValueError(f"격자 해상도는 축별 10 이상이어야 함: {resolution}")
    bounds = bounds or ORACLE_BOUNDS[form]
    axes = [np.linspace(lo, hi, resolution) for lo, hi in bounds]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)

    best_error = np.inf
    best_theta = mesh[0]
    for start in range(0, len(mesh), chunk_size):
        chunk = mesh[start:start + chunk_size]
        errors = fit_error(chunk, quotes, grid, kind, form)
        idx = int(np.argmin(errors))
        if errors[idx] < best_error:
            best_error = float(errors[idx])
            best_theta = chunk[idx]

    return -best_error, best_theta.copy()
