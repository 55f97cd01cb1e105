"""
프로젝트 설정 파일
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Project paths
BASE_DIR = Path(__file__).resolve().parent.parent
OUTPUT_DIR = Path(os.getenv("VOLFIT_OUTPUT_DIR", str(BASE_DIR / "output")))
LOGS_DIR = BASE_DIR / "logs"

# Create directories if not exist
for dir_path in [OUTPUT_DIR, LOGS_DIR]:
    dir_path.mkdir(parents=True, exist_ok=True)

# Volatility slice model
N_PARAMS = 3  # 파라미터 개수 K
DEFAULT_KAPPAS = [-0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4]  # 로그 머니니스 그리드
DEFAULT_MATURITY = 1.0  # 만기 (년)
DEFAULT_PARAM_FORM = "quadratic"
SVI_SMOOTHING = 0.1  # reduced SVI 의 s (고정)
SVI_VARIANCE_FLOOR = 1e-10  # 총분산 하한 ε
MODEL_VOL_FLOOR = 1e-10  # 음수 모델 변동성 보상 계산 시 하한

# Market generation
DEFAULT_SHAPE = "skew"
DEFAULT_SPREAD = 0.01  # 정적 시장 호가 스프레드 (vol 단위)
DEFAULT_EPISODE_LENGTH = 50  # 에피소드 길이 M
SPREAD_FLOOR = 0.0005  # quasi-dynamic 스프레드 하한
VOL_FLOOR = 0.01  # quasi-dynamic mid 하한
PSD_REPAIR_TOLERANCE = 1e-6  # 상관행렬 고유값 보정 허용치

# Rewards
DEFAULT_REWARD_KIND = "mse"
REWARD_SPREAD_FLOOR = 1e-6  # SMSE 스프레드 하한

# Environment
FLAT_LEVEL = 0.2  # 초기 flat 변동성 수준
ACTION_BOUND = 0.5  # 계수별 bump 상한 a_max
NORMALIZER_EPS = 1e-6

# Neural networks
HIDDEN_LAYERS = 2
HIDDEN_UNITS = 256
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# DDPG / SAC 공통
GAMMA = 0.99
TAU = 0.001

# DDPG
NOISE_SIGMA_MAX = 0.15  # σ_0
NOISE_SIGMA_MIN = 0.01
NOISE_DECAY_POWER = 4
OU_THETA = 0.15
OU_DT = 1e-2

# SAC
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
INITIAL_ALPHA = 0.1

# 시나리오별 기본 하이퍼파라미터: (actor_lr, critic_lr, buffer_size, batch_size)
DDPG_DEFAULTS = {
    "static": (0.0025, 0.0025, 1000, 64),
    "sequential": (0.0025, 0.0025, 1000, 64),
    "quasi_dynamic": (2.5e-5, 2.5e-4, 2000, 252),
}
SAC_DEFAULTS = {
    "static": (2.5e-5, 2.5e-4, 1000, 64),
    "sequential": (2.5e-5, 2.5e-4, 1000, 64),
    "quasi_dynamic": (2.5e-5, 2.5e-4, 2000, 252),
}

# Benchmark optimizer
BENCH_RESTARTS = 8
BENCH_MAX_EVALUATIONS = 5000
BENCH_SIMPLEX_TOLERANCE = 1e-10
REWARD_THRESHOLD_FACTOR = 1.1  # R_0 = 1.1 × 벤치마크 보상

# Experiment harness
DEFAULT_EPISODES = 2000
EVAL_EVERY = 10  # 평가 에피소드 주기
TRIM_QUANTILE = 0.25  # 하위 25% 시드 제외
VALIDATION_AGENTS = 5
TRAILING_WINDOW_STATIC = 1000
TRAILING_WINDOW_SEQUENTIAL = 50
GAP_TOLERANCE = 5e-3  # 테스트 단계 PASS/FAIL 허용 오차
WORKERS = int(os.getenv("VOLFIT_WORKERS", "1"))
EVAL_SEED_OFFSET = 10_000  # 평가 환경 시드 = 학습 시드 + offset

# Report Configuration
CSV_FLOAT_FORMAT = "%.12g"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Logging
LOG_LEVEL = os.getenv("VOLFIT_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE_MAX_SIZE = 10 * 1024 * 1024  # 10MB
LOG_FILE_BACKUP_COUNT = 5
