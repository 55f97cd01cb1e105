"""
예외 클래스 정의
"""


class VolFitError(Exception):
    """volfit 공통 예외"""


class InvalidParameterError(VolFitError, ValueError):
    """θ 벡터가 유한하지 않거나 길이가 K 가 아님"""


class EmptyGridError(VolFitError, ValueError):
    """머니니스 그리드가 비어 있음"""


class InvalidVolError(VolFitError, ValueError):
    """변동성이 0 이하"""


class ConfigError(VolFitError, ValueError):
    """설정 오류 (시장, 실험, 하이퍼파라미터)"""


class SpreadDivisionError(VolFitError, ZeroDivisionError):
    """SMSE 계산 시 스프레드 0 (하한 비활성화)"""


class LifecycleError(VolFitError, RuntimeError):
    """종료된 에피소드에서 step 호출"""


class ShapeError(VolFitError, ValueError):
    """신경망 입력/파라미터 차원 불일치"""


class CacheError(VolFitError, RuntimeError):
    """forward 캐시가 현재 네트워크와 맞지 않음"""


class CheckpointError(VolFitError, ValueError):
    """체크포인트 로드 실패 또는 차원 불일치"""
