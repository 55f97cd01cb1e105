"""
trace / 결과 CSV, JSONL 출력 모듈
"""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from config.settings import CSV_FLOAT_FORMAT, OUTPUT_DIR
from src.calculator.volmodel import MoneynessGrid, ParamForm, eval_slice
from src.market.simulator import QuoteSlice
from src.utils.logger import setup_logger

TRACE_BASE_COLUMNS = ["episode", "step", "r", "r_D"]


class TraceExporter:
    """pandas DataFrame 으로 trace 를 CSV / JSONL 로 출력"""

    def __init__(self, output_dir: Optional[Path] = None):
        """
        초기화

        Args:
            output_dir: 출력 디렉토리 (기본값: OUTPUT_DIR)
        """
        self.logger = setup_logger(__name__, "trace_exporter.log")
        self.output_dir = Path(output_dir) if output_dir is not None else OUTPUT_DIR
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _write_csv(self, df: pd.DataFrame, filename: str) -> Path:
        filepath = self.output_dir / filename
        try:
            df.to_csv(filepath, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
            self.logger.info(f"CSV 파일 생성: {filepath} ({len(df)}행)")
            return filepath
        except Exception as e:
            self.logger.error(f"CSV 출력 실패: {filepath} - {e}")
            raise

    def export_training_trace(
        self,
        rows: List[Dict[str, Any]],
        trace_columns: Sequence[str],
        filename: str = "training_trace.csv"
    ) -> Path:
        """
        학습 trace (step 당 한 행)

        Args:
            rows: StepRecord.to_row() 결과
            trace_columns: 알고리즘별 열 (DDPG: critic_loss, actor_obj, sigma_n / SAC: alpha 등)
            filename: 파일명

        Returns:
            생성된 파일 경로
        """
        columns = TRACE_BASE_COLUMNS + list(trace_columns) + ["learning_flag"]
        df = pd.DataFrame(rows, columns=columns)
        return self._write_csv(df, filename)

    def export_market(self, slices: Iterable[QuoteSlice], grid: MoneynessGrid, filename: str = "market.csv") -> Path:
        """호가 경로 (step, kappa, bid, ask)"""
        records = []
        for quotes in slices:
            for j, kappa in enumerate(grid.kappas):
                records.append({
                    "step": quotes.step,
                    "kappa": kappa,
                    "bid": float(quotes.bid[j]),
                    "ask": float(quotes.ask[j]),
                })
        return self._write_csv(pd.DataFrame(records, columns=["step", "kappa", "bid", "ask"]), filename)

    def export_bench_smile(
        self,
        quotes: QuoteSlice,
        grid: MoneynessGrid,
        theta,
        form: ParamForm,
        filename: str = "bench_smile.csv"
    ) -> Path:
        """벤치마크 피팅 스마일 (kappa, mid, model_vol)"""
        df = pd.DataFrame({
            "kappa": list(grid.kappas),
            "mid": quotes.mid,
            "model_vol": eval_slice(theta, grid, form),
        })
        return self._write_csv(df, filename)

    def export_eval_curves(self, tuples: List[Any], filename: str = "eval_curves.csv") -> Path:
        """
        조합별 평가 곡선 (시드 절사 평균과 누적 평균)

        Args:
            tuples: TupleResult 목록
        """
        records = []
        for result in tuples:
            episodes = result.runs[0].eval_episodes if result.runs else []
            for j, (trimmed, cumulative) in enumerate(zip(result.trimmed_curve, result.cumulative_curve)):
                records.append({
                    "tuple": result.index,
                    "episode": episodes[j] if j < len(episodes) else None,
                    "trimmed_mean": trimmed,
                    "cumulative_mean": cumulative,
                })
        columns = ["tuple", "episode", "trimmed_mean", "cumulative_mean"]
        return self._write_csv(pd.DataFrame(records, columns=columns), filename)

    def export_buffer_trace(self, logs: List[Any], filename: str = "buffer_trace.csv") -> Path:
        """에피소드별 리플레이 버퍼 최소 / 평균 보상"""
        df = pd.DataFrame(
            [{"episode": log.episode, "buffer_min": log.buffer_min, "buffer_mean": log.buffer_mean} for log in logs],
            columns=["episode", "buffer_min", "buffer_mean"],
        )
        return self._write_csv(df, filename)

    def export_trailing_smile(self, rows: List[Dict[str, Any]], filename: str = "trailing_smile.csv") -> Path:
        """최근 W 에피소드의 최선 / 평균 슬라이스 (kappa, mid, best_vol, mean_vol)"""
        return self._write_csv(pd.DataFrame(rows, columns=["kappa", "mid", "best_vol", "mean_vol"]), filename)

    def export_test_steps(self, rows: List[Dict[str, Any]], filename: str = "test_steps.csv") -> Path:
        columns = ["seed", "step", "agent_reward", "bench_reward", "gap", "status"]
        return self._write_csv(pd.DataFrame(rows, columns=columns), filename)

    def export_test_smiles(self, rows: List[Dict[str, Any]], filename: str = "test_smiles.csv") -> Path:
        columns = ["seed", "step", "kappa", "mid", "model_vol", "bench_vol"]
        return self._write_csv(pd.DataFrame(rows, columns=columns), filename)

    def export_jsonl(self, records: Iterable[Dict[str, Any]], filename: str) -> Path:
        """한 줄에 JSON 객체 하나"""
        filepath = self.output_dir / filename
        try:
            count = 0
            with open(filepath, 'w', encoding='utf-8') as f:
                for record in records:
                    f.write(json.dumps(record, ensure_ascii=False) + "\n")
                    count += 1
            self.logger.info(f"JSONL 파일 생성: {filepath} ({count}개 레코드)")
            return filepath
        except Exception as e:
            self.logger.error(f"JSONL 출력 실패: {filepath} - {e}")
            raise
