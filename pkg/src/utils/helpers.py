"""
공통 헬퍼 함수
"""
import base64
import hashlib
import json
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from src.utils.logger import setup_logger

logger = setup_logger(__name__, "volfit.log")


def save_json(data: Any, filepath: Path, indent: int = 2) -> bool:
    """
    JSON 파일 저장

    Args:
        data: 저장할 데이터
        filepath: 파일 경로
        indent: 들여쓰기 크기

    Returns:
        저장 성공 여부
    """
    try:
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(data, f, ensure_ascii=False, indent=indent)
        return True
    except (OSError, TypeError, ValueError) as e:
        logger.error(f"JSON 저장 실패 ({filepath}): {e}")
        return False


def load_json(filepath: Path) -> Optional[Any]:
    """
    JSON 파일 로드

    Args:
        filepath: 파일 경로

    Returns:
        로드된 데이터 또는 None
    """
    try:
        filepath = Path(filepath)
        if filepath.exists():
            with open(filepath, 'r', encoding='utf-8') as f:
                return json.load(f)
    except (OSError, ValueError) as e:
        logger.error(f"JSON 로드 실패 ({filepath}): {e}")
    return None


def get_timestamp(format_string: str = "%Y%m%d_%H%M%S") -> str:
    """
    현재 타임스탬프 반환

    Args:
        format_string: 날짜 형식 문자열

    Returns:
        형식화된 타임스탬프
    """
    return datetime.now().strftime(format_string)


def trimmed_mean(values: Sequence[float], excluded_quantile: float = 0.25) -> float:
    """
    하위 분위 제외 평균

    하위 floor(q × n) 개 값을 제외한 뒤 평균. 제외 개수가 0 이면 단순 평균과 같다.

    Args:
        values: 값 목록 (시드별 평가 보상 등)
        excluded_quantile: 제외할 하위 분위 (기본 25%)

    Returns:
        절사 평균
    """
    if len(values) == 0:
        raise ValueError("빈 값 목록의 절사 평균은 정의되지 않음")
    ordered = sorted(float(v) for v in values)
    n_excluded = int(math.floor(excluded_quantile * len(ordered)))
    kept = ordered[n_excluded:]
    return float(sum(kept) / len(kept))


def cumulative_mean(values: Iterable[float]) -> List[float]:
    """누적 평균 곡선"""
    result = []
    total = 0.0
    for i, value in enumerate(values, 1):
        total += float(value)
        result.append(total / i)
    return result


def encode_array(array: np.ndarray) -> str:
    """float64 리틀엔디언 배열을 base64 문자열로 인코딩"""
    data = np.ascontiguousarray(array, dtype='<f8').tobytes()
    return base64.b64encode(data).decode('ascii')


def decode_array(text: str, shape: Sequence[int]) -> np.ndarray:
    """encode_array 의 역변환"""
    data = base64.b64decode(text.encode('ascii'))
    return np.frombuffer(data, dtype='<f8').reshape(tuple(shape)).astype(np.float64)


def arrays_hash(arrays: Iterable[np.ndarray]) -> str:
    """
    배열 목록의 SHA-256 해시 (파라미터 불변성 확인용)

    Args:
        arrays: numpy 배열들

    Returns:
        16진수 해시 문자열
    """
    digest = hashlib.sha256()
    for array in arrays:
        arr = np.ascontiguousarray(array, dtype='<f8')
        digest.update(str(arr.shape).encode('ascii'))
        digest.update(arr.tobytes())
    return digest.hexdigest()
