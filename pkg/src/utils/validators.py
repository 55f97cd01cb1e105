"""
설정 및 호가 데이터 검증 유틸리티
"""
from typing import Any, List, Tuple

import numpy as np


class ConfigValidator:
    """설정 검증 클래스"""

    # 하이퍼파라미터 중 양수여야 하는 필드
    POSITIVE_FIELDS = [
        "actor_lr",
        "critic_lr",
        "alpha_lr",
        "buffer_size",
        "batch_size",
        "hidden_units",
        "hidden_layers",
        "action_bound",
        "initial_alpha",
    ]

    VALID_ALGORITHMS = ["ddpg", "sac"]
    VALID_NOISE_KINDS = ["gaussian", "ou"]

    @classmethod
    def validate_quotes(cls, bid: np.ndarray, ask: np.ndarray) -> Tuple[bool, List[str]]:
        """
        호가 슬라이스 검증

        Args:
            bid: bid 변동성 배열
            ask: ask 변동성 배열

        Returns:
            (검증 성공 여부, 에러 메시지 리스트)
        """
        errors = []

        if bid.shape != ask.shape or bid.ndim != 1:
            errors.append(f"bid/ask 길이 불일치: {bid.shape} vs {ask.shape}")
            return False, errors

        if not (np.all(np.isfinite(bid)) and np.all(np.isfinite(ask))):
            errors.append("호가에 유한하지 않은 값이 있음")
        elif np.any(bid <= 0.0):
            errors.append(f"bid 가 0 이하: {bid.min():.6g}")
        elif np.any(ask < bid):
            errors.append("ask < bid 인 점이 있음 (crossed quote)")

        return (len(errors) == 0, errors)

    @classmethod
    def validate_market(cls, config: Any) -> Tuple[bool, List[str]]:
        """
        시장 설정 검증

        Args:
            config: MarketConfig

        Returns:
            (검증 성공 여부, 에러 메시지 리스트)
        """
        errors = []
        n = config.grid.size

        if config.episode_length < 1:
            errors.append(f"에피소드 길이는 1 이상: {config.episode_length}")
        if config.spread < 0:
            errors.append(f"스프레드가 음수: {config.spread}")
        if not 0 < config.spread_floor <= config.vol_floor:
            errors.append(
                f"하한 설정 오류: 0 < spread_floor({config.spread_floor}) <= vol_floor({config.vol_floor})"
            )

        copula = config.copula
        if copula is not None:
            for name in ["mid_means", "mid_stds", "spread_means", "spread_stds"]:
                values = getattr(copula, name)
                if values.shape != (n,):
                    errors.append(f"코퓰러 {name} 길이 오류: {values.shape} (예상: ({n},))")
            if np.any(copula.mid_stds < 0) or np.any(copula.spread_stds < 0):
                errors.append("코퓰러 표준편차가 음수")
            if copula.correlation.shape != (2 * n, 2 * n):
                errors.append(f"상관행렬 크기 오류: {copula.correlation.shape} (예상: ({2 * n}, {2 * n}))")

        return (len(errors) == 0, errors)

    @classmethod
    def validate_hyperparams(cls, params: Any) -> Tuple[bool, List[str]]:
        """
        하이퍼파라미터 검증

        Args:
            params: HyperParams

        Returns:
            (검증 성공 여부, 에러 메시지 리스트)
        """
        errors = []

        for name in cls.POSITIVE_FIELDS:
            value = getattr(params, name)
            if value is None or not value > 0:
                errors.append(f"{name} 는 양수여야 함: {value}")

        if not 0.0 <= params.gamma <= 1.0:
            errors.append(f"gamma 범위 오류: {params.gamma}")
        if not 0.0 <= params.tau <= 1.0:
            errors.append(f"tau 범위 오류: {params.tau}")
        if not 0.0 < params.sigma_min <= params.sigma_max:
            errors.append(f"노이즈 범위 오류: [{params.sigma_min}, {params.sigma_max}]")
        if params.noise_kind not in cls.VALID_NOISE_KINDS:
            errors.append(f"잘못된 노이즈 종류: {params.noise_kind}")
        if params.batch_size > params.buffer_size:
            errors.append(f"batch_size({params.batch_size}) > buffer_size({params.buffer_size})")

        return (len(errors) == 0, errors)

    @classmethod
    def validate_experiment(cls, config: Any) -> Tuple[bool, List[str]]:
        """
        실험 설정 검증

        Args:
            config: ExperimentConfig

        Returns:
            (검증 성공 여부, 에러 메시지 리스트)
        """
        errors = []

        if config.algorithm not in cls.VALID_ALGORITHMS:
            errors.append(f"잘못된 알고리즘: {config.algorithm}")
        if config.episodes < 1:
            errors.append(f"에피소드 수는 1 이상: {config.episodes}")
        if config.eval_every < 1:
            errors.append(f"평가 주기는 1 이상: {config.eval_every}")
        if not config.seeds:
            errors.append("시드 목록이 비어 있음")
        if config.validation_agents < 1:
            errors.append(f"검증 에이전트 수는 1 이상: {config.validation_agents}")
        if not 0.0 <= config.trim_quantile < 1.0:
            errors.append(f"절사 분위 범위 오류: {config.trim_quantile}")

        for name, values in config.hyper_grid.items():
            if not hasattr(config.hyper, name):
                errors.append(f"알 수 없는 하이퍼파라미터: {name}")
            elif not values:
                errors.append(f"하이퍼파라미터 그리드가 비어 있음: {name}")

        is_valid, hyper_errors = cls.validate_hyperparams(config.hyper)
        errors.extend(hyper_errors)

        return (len(errors) == 0, errors)
