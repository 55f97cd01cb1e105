"""
변동성 슬라이스 파라미터화 및 Black-Scholes 베가
"""
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np
from scipy.stats import norm

from config.settings import (
    N_PARAMS,
    DEFAULT_KAPPAS,
    DEFAULT_MATURITY,
    SVI_SMOOTHING,
    SVI_VARIANCE_FLOOR
)
from src.utils.exceptions import EmptyGridError, InvalidParameterError, InvalidVolError

ArrayLike = Union[Sequence[float], np.ndarray]


class ParamForm(str, Enum):
    """슬라이스 파라미터화 형식"""

    QUADRATIC = "quadratic"
    SVI_REDUCED = "svi_reduced"

    @classmethod
    def parse(cls, value: Union[str, "ParamForm"]) -> "ParamForm":
        try:
            return cls(value)
        except ValueError:
            raise InvalidParameterError(f"알 수 없는 파라미터 형식: {value}") from None


@dataclass(frozen=True)
class MoneynessGrid:
    """
    로그 머니니스 그리드

    Attributes:
        kappas: 순증가하는 로그 머니니스 값 (n 개)
        maturity: 만기 T (년)
    """

    kappas: tuple
    maturity: float = DEFAULT_MATURITY

    def __post_init__(self):
        kappas = tuple(float(k) for k in self.kappas)
        object.__setattr__(self, "kappas", kappas)
        if len(kappas) == 0:
            raise EmptyGridError("머니니스 그리드가 비어 있음")
        if not all(np.isfinite(kappas)):
            raise InvalidParameterError("그리드에 유한하지 않은 값이 있음")
        if any(b <= a for a, b in zip(kappas, kappas[1:])):
            raise InvalidParameterError(f"그리드가 순증가하지 않음: {kappas}")
        if len(kappas) < N_PARAMS:
            raise InvalidParameterError(f"그리드 크기 {len(kappas)} < K={N_PARAMS}")
        if not (np.isfinite(self.maturity) and self.maturity > 0):
            raise InvalidParameterError(f"만기는 양수여야 함: {self.maturity}")

    @property
    def size(self) -> int:
        return len(self.kappas)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.kappas, dtype=np.float64)

    @classmethod
    def default(cls) -> "MoneynessGrid":
        return cls(tuple(DEFAULT_KAPPAS), DEFAULT_MATURITY)

    def to_dict(self) -> dict:
        return {"kappas": list(self.kappas), "maturity": self.maturity}

    @classmethod
    def from_dict(cls, data: dict) -> "MoneynessGrid":
        return cls(tuple(data.get("kappas", DEFAULT_KAPPAS)), float(data.get("maturity", DEFAULT_MATURITY)))


def check_theta(theta: ArrayLike) -> np.ndarray:
    """
    θ 검증 후 float64 배열로 변환

    마지막 축 길이가 K 인 배치 입력 (…, K) 도 허용한다.

    Raises:
        InvalidParameterError: 길이 불일치 또는 유한하지 않은 값
    """
    arr = np.asarray(theta, dtype=np.float64)
    if arr.ndim == 0 or arr.shape[-1] != N_PARAMS:
        raise InvalidParameterError(f"θ 길이는 {N_PARAMS} 이어야 함: shape={arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"θ 에 유한하지 않은 값이 있음: {arr}")
    return arr


def _as_kappas(grid: Union[MoneynessGrid, ArrayLike]) -> np.ndarray:
    if isinstance(grid, MoneynessGrid):
        return grid.array
    kappas = np.asarray(grid, dtype=np.float64)
    if kappas.size == 0:
        raise EmptyGridError("머니니스 그리드가 비어 있음")
    return kappas


def svi_total_variance(theta: np.ndarray, kappas: np.ndarray) -> np.ndarray:
    """reduced SVI 총분산 w(κ) = a + b(ρκ + sqrt(κ² + s²))"""
    a = theta[..., 0:1]
    b = theta[..., 1:2]
    rho = theta[..., 2:3]
    return a + b * (rho * kappas + np.sqrt(kappas ** 2 + SVI_SMOOTHING ** 2))


def eval_slice(
    theta: ArrayLike,
    grid: Union[MoneynessGrid, ArrayLike],
    form: Union[str, ParamForm] = ParamForm.QUADRATIC,
    maturity: float = None
) -> np.ndarray:
    """
    파라미터 θ 로 슬라이스 변동성 계산

    quadratic:   σ(κ) = θ1 + θ2·κ + θ3·κ²
    svi_reduced: σ(κ) = sqrt(max(w(κ), ε) / T)

    Args:
        theta: 파라미터 벡터 (K,) 또는 배치 (m, K)
        grid: MoneynessGrid 또는 κ 배열
        form: 파라미터 형식
        maturity: κ 배열을 넘긴 경우의 만기 (기본: grid 의 만기)

    Returns:
        모델 변동성 (n,) 또는 (m, n)
    """
    form = ParamForm.parse(form)
    theta = check_theta(theta)
    kappas = _as_kappas(grid)

    if form is ParamForm.QUADRATIC:
        vols = theta[..., 0:1] + theta[..., 1:2] * kappas + theta[..., 2:3] * kappas ** 2
    else:
        if maturity is None:
            maturity = grid.maturity if isinstance(grid, MoneynessGrid) else DEFAULT_MATURITY
        w = svi_total_variance(theta, kappas)
        vols = np.sqrt(np.maximum(w, SVI_VARIANCE_FLOOR) / maturity)

    return vols.reshape(theta.shape[:-1] + kappas.shape)


def slice_gradient(
    theta: ArrayLike,
    grid: MoneynessGrid,
    form: Union[str, ParamForm] = ParamForm.QUADRATIC
) -> np.ndarray:
    """
    ∂σ(κ_j)/∂θ_i 해석적 야코비안 (n, K)

    quadratic 형식은 (1, κ, κ²). svi_reduced 는 분산 하한에 걸린 점에서 0.
    """
    form = ParamForm.parse(form)
    theta = check_theta(theta)
    kappas = grid.array

    if form is ParamForm.QUADRATIC:
        return np.stack([np.ones_like(kappas), kappas, kappas ** 2], axis=1)

    a, b, rho = theta
    root = np.sqrt(kappas ** 2 + SVI_SMOOTHING ** 2)
    w = a + b * (rho * kappas + root)
    active = w > SVI_VARIANCE_FLOOR
    dsigma_dw = np.where(active, 0.5 / np.sqrt(np.maximum(w, SVI_VARIANCE_FLOOR) * grid.maturity), 0.0)
    dw = np.stack([np.ones_like(kappas), rho * kappas + root, b * kappas], axis=1)
    return dw * dsigma_dw[:, None]


def is_admissible(
    theta: ArrayLike,
    grid: MoneynessGrid,
    form: Union[str, ParamForm] = ParamForm.QUADRATIC
) -> bool:
    """
    θ 허용 여부 (그리드 전체에서 모델 변동성 > 0)

    svi_reduced 는 총분산 w(κ) > 0 여부로 판단.
    """
    form = ParamForm.parse(form)
    theta = check_theta(theta)
    if form is ParamForm.QUADRATIC:
        return bool(np.all(eval_slice(theta, grid, form) > 0.0))
    return bool(np.all(svi_total_variance(theta, grid.array) > 0.0))


def flat_theta(level: float, form: Union[str, ParamForm], grid: MoneynessGrid) -> np.ndarray:
    """
    flat 슬라이스를 만드는 θ

    quadratic 은 (level, 0, 0), svi_reduced 는 (level²·T, 0, 0).
    """
    form = ParamForm.parse(form)
    if form is ParamForm.QUADRATIC:
        return np.array([level, 0.0, 0.0])
    return np.array([level ** 2 * grid.maturity, 0.0, 0.0])


def bs_vega(kappa: ArrayLike, sigma: ArrayLike, maturity: float) -> np.ndarray:
    """
    Black-Scholes 베가 (forward = 1, 금리 0, 단위 명목)

    vega = n(d1)·√T,  d1 = (−κ + σ²T/2) / (σ√T)

    Args:
        kappa: 로그 머니니스
        sigma: 변동성 (> 0)
        maturity: 만기 T (> 0)

    Returns:
        베가 (입력과 같은 shape, 스칼라 입력이면 float)

    Raises:
        InvalidVolError: σ ≤ 0 또는 T ≤ 0
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    kappa = np.asarray(kappa, dtype=np.float64)
    if np.any(~np.isfinite(sigma)) or np.any(sigma <= 0.0):
        raise InvalidVolError(f"변동성은 양수여야 함: {sigma}")
    if not maturity > 0:
        raise InvalidVolError(f"만기는 양수여야 함: {maturity}")

    sqrt_t = np.sqrt(maturity)
    d1 = (-kappa + 0.5 * sigma ** 2 * maturity) / (sigma * sqrt_t)
    vega = norm.pdf(d1) * sqrt_t
    if np.ndim(vega) == 0:
        return float(vega)
    return vega
