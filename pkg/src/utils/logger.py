"""
로깅 유틸리티

콘솔은 stderr 로만 출력한다. stdout 은 volfit CLI 의 JSON 결과 한 줄 전용이다.
"""
import logging
import logging.handlers
import sys
from typing import Optional

from config.settings import (
    LOG_FILE_BACKUP_COUNT,
    LOG_FILE_MAX_SIZE,
    LOG_FORMAT,
    LOG_LEVEL,
    LOGS_DIR
)


def _level(name: str) -> int:
    level = logging.getLevelName(str(name).upper())
    return level if isinstance(level, int) else logging.INFO


def setup_logger(name: str, log_file: Optional[str] = None) -> logging.Logger:
    """
    컴포넌트 로거 생성

    Args:
        name: 로거 이름 (보통 모듈 __name__)
        log_file: LOGS_DIR 아래 회전 로그 파일명

    Returns:
        설정된 로거 객체
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    console_level = _level(LOG_LEVEL)
    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.handlers.RotatingFileHandler(
            LOGS_DIR / log_file,
            maxBytes=LOG_FILE_MAX_SIZE,
            backupCount=LOG_FILE_BACKUP_COUNT,
            encoding="utf-8"
        )
        file_handler.setLevel(console_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.setLevel(console_level)
    logger.propagate = False
    return logger


main_logger = setup_logger("volfit", "volfit.log")
