"""
volfit 명령행 진입점

    python volfit.py train|validate|test|bench|gen-market --config <path.json> [--seed N] [--out DIR]

성공 시 종료 코드 0, volfit 오류는 2, 그 외 오류는 1.
실패하면 stderr 에 JSON 한 줄 ({"status": "error", ...}) 을 출력한다.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import OUTPUT_DIR
from src.calculator.bench import benchmark_fit
from src.harness.config import ExperimentConfig, load_config
from src.harness.pipeline import (
    AGENT_CLASSES,
    run_testing,
    run_training,
    run_validation,
    trailing_window_smile
)
from src.market.simulator import MarketSimulator, ScenarioKind, gen_static
from src.reporter.gap_alerts import GapAlertSystem
from src.reporter.markdown_reporter import MarkdownReporter
from src.reporter.trace_exporter import TraceExporter
from src.utils.exceptions import ConfigError, VolFitError
from src.utils.helpers import load_json, save_json
from src.utils.logger import main_logger

TRAINING_RESULT_FILE = "training_result.json"
CHECKPOINT_FILE = "best_checkpoint.json"


def _emit(payload: Dict[str, Any]):
    print(json.dumps(payload, ensure_ascii=False))


def _export_runs(exporter: TraceExporter, runs: List[Any], config: ExperimentConfig, trace_columns: List[str]):
    """시드별 학습 trace, 버퍼 trace, 최근 구간 스마일, 에피소드 JSONL"""
    for run in runs:
        suffix = f"seed{run.seed}"
        exporter.export_training_trace(run.trace_rows, trace_columns, f"training_trace_{suffix}.csv")
        exporter.export_buffer_trace(run.logs, f"buffer_trace_{suffix}.csv")
        exporter.export_trailing_smile(
            trailing_window_smile(run.logs, config.trailing_window, config),
            f"trailing_smile_{suffix}.csv",
        )
        exporter.export_jsonl((log.to_dict() for log in run.logs), f"episodes_{suffix}.jsonl")


def _trace_columns(config: ExperimentConfig) -> List[str]:
    return AGENT_CLASSES[config.algorithm].trace_columns


def cmd_train(config: ExperimentConfig, out_dir: Path) -> Dict[str, Any]:
    result = run_training(config)
    exporter = TraceExporter(out_dir)
    exporter.export_eval_curves(result.tuples)
    _export_runs(exporter, result.best.runs, config, _trace_columns(config))

    summary = {
        "best_index": result.best_index,
        "best_overrides": result.best_overrides,
        "threshold": result.threshold,
        "reward_threshold": result.reward_threshold,
        "scores": [t.score for t in result.tuples],
    }
    save_json(summary, out_dir / TRAINING_RESULT_FILE)
    return summary


def cmd_validate(config: ExperimentConfig, out_dir: Path) -> Dict[str, Any]:
    training = load_json(out_dir / TRAINING_RESULT_FILE)
    if training is None:
        raise ConfigError(f"학습 결과가 없음: {out_dir / TRAINING_RESULT_FILE} (train 을 먼저 실행)")

    result = run_validation(config, training["best_overrides"], training["threshold"])
    summary = {
        "threshold": result.threshold,
        "candidates": [vars(c) for c in result.candidates],
        "best_index": result.best_index,
        "failures": [c.seed for c in result.failures],
    }
    save_json(summary, out_dir / "validation_result.json")
    if result.has_candidate:
        save_json(result.best_checkpoint, out_dir / CHECKPOINT_FILE)
        exporter = TraceExporter(out_dir / "validation")
        _export_runs(exporter, [result.runs[result.best_index]], config, _trace_columns(config))
    else:
        summary["status"] = "no_candidate"
    return summary


def cmd_test(config: ExperimentConfig, out_dir: Path, checkpoint_path: Optional[Path]) -> Dict[str, Any]:
    path = checkpoint_path or out_dir / CHECKPOINT_FILE
    checkpoint = load_json(path)
    if checkpoint is None:
        raise ConfigError(f"체크포인트를 읽을 수 없음: {path}")

    report = run_testing(checkpoint, config)
    exporter = TraceExporter(out_dir)
    exporter.export_test_steps(report.steps)
    exporter.export_test_smiles(report.smiles)
    MarkdownReporter(out_dir).generate_test_report(report, config)
    GapAlertSystem(config.gap_tolerance).send_alerts(report.alerts)
    return {"passed": report.passed, "summary": report.summary()}


def cmd_bench(config: ExperimentConfig, out_dir: Path) -> Dict[str, Any]:
    market = config.market
    if market.kind is ScenarioKind.QUASI_DYNAMIC:
        quotes = MarketSimulator(market, config.seeds[0]).reset()
    else:
        quotes = gen_static(market)
    result = benchmark_fit(quotes, market.grid, config.reward_kind, config.param_form)
    TraceExporter(out_dir).export_bench_smile(quotes, market.grid, result.theta, config.param_form)
    return {
        "theta": result.theta.tolist(),
        "reward": result.reward,
        "evaluations": result.evaluations,
    }


def cmd_gen_market(config: ExperimentConfig, out_dir: Path) -> Dict[str, Any]:
    slices = MarketSimulator(config.market, config.seeds[0]).simulate_episode()
    path = TraceExporter(out_dir).export_market(slices, config.market.grid)
    return {"steps": len(slices), "file": str(path)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volfit", description="RL 변동성 슬라이스 피팅 실험")
    parser.add_argument("command", choices=["train", "validate", "test", "bench", "gen-market"])
    parser.add_argument("--config", type=Path, required=True, help="실험 설정 JSON")
    parser.add_argument("--seed", type=int, default=None, help="기준 시드 (시드 목록을 seed 부터 다시 부여)")
    parser.add_argument("--out", type=Path, default=None, help=f"출력 디렉토리 (기본: {OUTPUT_DIR})")
    parser.add_argument("--checkpoint", type=Path, default=None, help="test: 체크포인트 경로")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_base_seed(args.seed)
        out_dir = Path(args.out) if args.out is not None else OUTPUT_DIR
        out_dir.mkdir(parents=True, exist_ok=True)

        main_logger.info(f"volfit {args.command} 시작 - 설정 {args.config}, 출력 {out_dir}")
        if args.command == "train":
            payload = cmd_train(config, out_dir)
        elif args.command == "validate":
            payload = cmd_validate(config, out_dir)
        elif args.command == "test":
            payload = cmd_test(config, out_dir, args.checkpoint)
        elif args.command == "bench":
            payload = cmd_bench(config, out_dir)
        else:
            payload = cmd_gen_market(config, out_dir)

        _emit({"status": "ok", "command": args.command, **payload})
        return 0

    except VolFitError as e:
        main_logger.error(f"volfit 오류: {e}")
        print(json.dumps({"status": "error", "error": type(e).__name__, "message": str(e)}, ensure_ascii=False),
              file=sys.stderr)
        return 2
    except Exception as e:
        main_logger.exception(f"예상치 못한 오류: {e}")
        print(json.dumps({"status": "error", "error": type(e).__name__, "message": str(e)}, ensure_ascii=False),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
