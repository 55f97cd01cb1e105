"""
Markdown 리포트 생성기 (테스트 단계)
"""
from pathlib import Path
from typing import Any, Dict, List, Optional

from tabulate import tabulate

from config.settings import DATE_FORMAT, OUTPUT_DIR
from src.utils.helpers import get_timestamp
from src.utils.logger import setup_logger


class MarkdownReporter:
    """테스트 단계 결과를 Markdown 으로 정리"""

    def __init__(self, output_dir: Optional[Path] = None):
        """초기화"""
        self.logger = setup_logger(__name__, "markdown_reporter.log")
        self.output_dir = Path(output_dir) if output_dir is not None else OUTPUT_DIR
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def generate_test_report(
        self,
        report,
        config,
        filename: str = "test_report.md"
    ) -> Path:
        """
        테스트 리포트 생성

        Args:
            report: TestReport
            config: ExperimentConfig
            filename: 파일명

        Returns:
            생성된 파일 경로
        """
        try:
            filepath = self.output_dir / filename
            lines = []
            lines.extend(self._generate_header(config))
            lines.append("")
            lines.extend(self._generate_summary(report))
            lines.append("")
            lines.extend(self._generate_step_table(report))
            lines.append("")
            lines.extend(self._generate_alerts(report.alerts))
            lines.extend(self._generate_footer())

            with open(filepath, 'w', encoding='utf-8') as f:
                f.write('\n'.join(lines))

            self.logger.info(f"Markdown 리포트 생성: {filepath}")
            return filepath

        except Exception as e:
            self.logger.error(f"리포트 생성 실패: {e}")
            raise

    def _generate_header(self, config) -> List[str]:
        """리포트 헤더 생성"""
        return [
            "# 📈 변동성 슬라이스 피팅 테스트 리포트",
            "",
            f"- **알고리즘**: {config.algorithm.upper()}",
            f"- **시나리오**: {config.scenario.value} / {config.market.shape}",
            f"- **보상**: {config.reward_kind.value}, **파라미터 형식**: {config.param_form.value}",
            f"- **테스트 시드**: {', '.join(str(s) for s in config.test_seeds)}",
            "",
            "---",
        ]

    def _generate_summary(self, report) -> List[str]:
        """시드별 요약 표"""
        rows = report.summary()
        lines = ["## 📊 시드별 요약", ""]
        table = [
            [
                r["seed"], r["steps"],
                f"{r['agent_mean']:.6e}", f"{r['bench_mean']:.6e}", f"{r['max_gap']:.3e}",
                r["pass"], r["fail"],
            ]
            for r in rows
        ]
        lines.append(tabulate(
            table,
            headers=["seed", "steps", "에이전트 평균", "벤치마크 평균", "최대 격차", "PASS", "FAIL"],
            tablefmt="github",
        ))
        lines.append("")
        verdict = "✅ 전체 통과" if report.passed else "❌ 허용치 초과 step 존재"
        lines.append(f"**판정**: {verdict} (허용 격차 {report.tolerance:.1e})")
        return lines

    def _generate_step_table(self, report, max_rows: int = 60) -> List[str]:
        """step 별 보상 비교 (긴 에피소드는 앞부분만)"""
        lines = ["## 🔍 step 별 비교", ""]
        table = [
            [r["seed"], r["step"], f"{r['agent_reward']:.6e}", f"{r['bench_reward']:.6e}", f"{r['gap']:.3e}", r["status"]]
            for r in report.steps[:max_rows]
        ]
        lines.append(tabulate(
            table,
            headers=["seed", "step", "에이전트", "벤치마크", "격차", "판정"],
            tablefmt="github",
        ))
        if len(report.steps) > max_rows:
            lines.append("")
            lines.append(f"*… 외 {len(report.steps) - max_rows}개 step (test_steps.csv 참고)*")
        return lines

    def _generate_alerts(self, alerts: List[Dict[str, Any]]) -> List[str]:
        if not alerts:
            return []
        lines = ["## 🚨 격차 알림", ""]
        for alert in alerts:
            lines.append(f"- [{alert['severity']}] {alert['message']}")
        lines.append("")
        return lines

    def _generate_footer(self) -> List[str]:
        """리포트 푸터 생성"""
        return [
            "",
            "---",
            "",
            "*본 리포트는 자동 생성되었습니다.*",
            "",
            f"*생성 시각: {get_timestamp(DATE_FORMAT)}*",
        ]
