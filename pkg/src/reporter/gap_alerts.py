"""
테스트 단계 RL-벤치마크 보상 격차 알림
"""
from datetime import datetime
from typing import Any, Dict, List

from config.settings import GAP_TOLERANCE
from src.utils.logger import setup_logger

PASS = "PASS"
FAIL = "FAIL"


def classify_gap(gap: float, tolerance: float = GAP_TOLERANCE) -> str:
    """격차 (벤치마크 보상 − 에이전트 보상) 가 허용치 이하면 PASS"""
    return PASS if gap <= tolerance else FAIL


class GapAlertSystem:
    """step 별 격차 판정과 FAIL 알림"""

    def __init__(self, tolerance: float = GAP_TOLERANCE):
        """
        초기화

        Args:
            tolerance: PASS 허용 격차
        """
        self.logger = setup_logger(__name__, "gap_alerts.log")
        self.tolerance = tolerance

    def check_gaps(self, steps: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """
        step 기록에 status 를 채우고 FAIL 알림 목록 반환

        Args:
            steps: seed, step, agent_reward, bench_reward 를 가진 행 (status, gap 이 추가됨)

        Returns:
            알림 목록
        """
        alerts = []
        for row in steps:
            gap = row["bench_reward"] - row["agent_reward"]
            row["gap"] = gap
            row["status"] = classify_gap(gap, self.tolerance)
            if row["status"] == FAIL:
                alerts.append({
                    "type": "gap",
                    # 허용치의 10배를 넘으면 high
                    "severity": "high" if gap > 10 * self.tolerance else "medium",
                    "message": (
                        f"seed {row['seed']} step {row['step']}: 격차 {gap:.3e} > {self.tolerance:.1e}"
                    ),
                    "timestamp": datetime.now().isoformat(),
                })

        if alerts:
            self.logger.warning(f"격차 초과 {len(alerts)}건 / {len(steps)} step")
        else:
            self.logger.info(f"모든 step 통과 ({len(steps)} step, 허용치 {self.tolerance:.1e})")
        return alerts

    def send_alerts(self, alerts: List[Dict[str, Any]]) -> bool:
        """콘솔 알림 출력"""
        if not alerts:
            return True
        try:
            print("\n" + "=" * 60)
            print(f"🚨 격차 알림: {len(alerts)}건")
            print("=" * 60)
            for i, alert in enumerate(alerts, 1):
                icon = {"high": "🔴", "medium": "🟡"}.get(alert["severity"], "⚪")
                print(f"{i}. {icon} [{alert['type']}] {alert['message']}")
            print("=" * 60)
            return True
        except Exception as e:
            self.logger.error(f"콘솔 알림 실패: {e}")
            return False
