"""
리포트 시스템 테스트 (trace CSV, Markdown 리포트, 격차 알림)
"""
import json
import math

import numpy as np
import pandas as pd
import pytest

from src.agents.base import EpisodeLog, StepRecord
from src.calculator.volmodel import MoneynessGrid
from src.harness.config import ExperimentConfig
from src.harness import pipeline
from src.market.simulator import MarketConfig, MarketSimulator, gen_static
from src.reporter.gap_alerts import FAIL, PASS, GapAlertSystem, classify_gap
from src.reporter.markdown_reporter import MarkdownReporter
from src.reporter.trace_exporter import TraceExporter

GRID = MoneynessGrid((-0.2, 0.0, 0.2))


def _step_rows():
    return [
        {"seed": 1, "step": 1, "agent_reward": -1e-3, "bench_reward": -5e-4},
        {"seed": 1, "step": 2, "agent_reward": -0.2, "bench_reward": -1e-3},
        {"seed": 2, "step": 1, "agent_reward": -0.01, "bench_reward": -1e-3},
    ]


def test_classify_gap():
    assert classify_gap(1e-3, 5e-3) == PASS
    assert classify_gap(5e-3, 5e-3) == PASS
    assert classify_gap(6e-3, 5e-3) == FAIL


def test_gap_alert_system():
    """격차 계산, status 기록, 심각도"""
    rows = _step_rows()
    alerts = GapAlertSystem(5e-3).check_gaps(rows)
    assert [r["status"] for r in rows] == [PASS, FAIL, FAIL]
    assert rows[0]["gap"] == pytest.approx(5e-4)
    assert [a["severity"] for a in alerts] == ["high", "medium"]
    assert GapAlertSystem(5e-3).send_alerts(alerts)
    assert GapAlertSystem().send_alerts([])


def test_export_training_trace(tmp_path):
    """열 순서: episode, step, r, r_D, 알고리즘 열, learning_flag"""
    records = [
        StepRecord(0, 1, -0.1, -0.05, np.zeros(3), np.zeros(3), True,
                   {"critic_loss": math.nan, "actor_obj": math.nan, "sigma_n": 0.15}),
        StepRecord(1, 1, -0.01, -0.02, np.zeros(3), np.zeros(3), False,
                   {"critic_loss": 0.5, "actor_obj": -0.3, "sigma_n": 0.14}),
    ]
    exporter = TraceExporter(tmp_path)
    path = exporter.export_training_trace([r.to_row() for r in records], ["critic_loss", "actor_obj", "sigma_n"])
    df = pd.read_csv(path)
    assert list(df.columns) == ["episode", "step", "r", "r_D", "critic_loss", "actor_obj", "sigma_n", "learning_flag"]
    assert df["learning_flag"].tolist() == [1, 0]
    assert math.isnan(df["critic_loss"][0])
    assert not path.read_bytes().endswith(b"\r\n")


def test_export_market_and_bench_smile(tmp_path):
    config = MarketConfig(kind="quasi_dynamic", grid=GRID, episode_length=4)
    slices = MarketSimulator(config, seed=0).simulate_episode()
    exporter = TraceExporter(tmp_path)
    market = pd.read_csv(exporter.export_market(slices, GRID))
    assert len(market) == 12
    assert (market["ask"] >= market["bid"]).all()

    quotes = gen_static(MarketConfig(shape="skew", grid=GRID))
    smile = pd.read_csv(exporter.export_bench_smile(quotes, GRID, [0.2, 0.0, 0.0], "quadratic"))
    assert smile["model_vol"].tolist() == pytest.approx([0.2, 0.2, 0.2])
    assert smile["mid"].tolist() == pytest.approx([0.28, 0.22, 0.18])


def test_export_buffer_trace_and_jsonl(tmp_path):
    logs = []
    for n in range(3):
        log = EpisodeLog(n, [StepRecord(n, 1, -0.1 * n, -0.1, np.zeros(3), np.full(3, n), True)])
        log.buffer_min = -0.1 * n
        log.buffer_mean = -0.05 * n
        logs.append(log)

    exporter = TraceExporter(tmp_path)
    df = pd.read_csv(exporter.export_buffer_trace(logs))
    assert df["episode"].tolist() == [0, 1, 2]

    path = exporter.export_jsonl((log.to_dict() for log in logs), "episodes.jsonl")
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    assert len(lines) == 3
    assert json.loads(lines[2])["final_det_theta"] == [2.0, 2.0, 2.0]


def test_markdown_report(tmp_path):
    """요약 표, step 표, 알림 섹션이 있는 리포트"""
    config = ExperimentConfig.from_dict({"market": {"kind": "static", "grid": {"kappas": [-0.2, 0.0, 0.2]}}})
    rows = _step_rows()
    alerts = GapAlertSystem(5e-3).check_gaps(rows)
    report = pipeline.TestReport(rows, [], alerts, 5e-3)

    path = MarkdownReporter(tmp_path).generate_test_report(report, config)
    text = path.read_text(encoding="utf-8")
    assert "DDPG" in text
    assert "시드별 요약" in text
    assert "격차 알림" in text
    assert "허용치 초과" in text
    assert text.count("| FAIL") >= 2

    summary = report.summary()
    assert [s["seed"] for s in summary] == [1, 2]
    assert summary[0]["fail"] == 1 and summary[0]["pass"] == 1
    assert not report.passed


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("📊 리포트 시스템 테스트")
    print("=" * 60)
    pytest.main([__file__, "-v"])
