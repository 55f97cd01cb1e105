"""
완전연결 신경망 (Xavier 초기화, 수동 역전파, Adam)
"""
import copy
import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from config.settings import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from src.utils.exceptions import CacheError, CheckpointError, ShapeError
from src.utils.helpers import decode_array, encode_array

ACTIVATIONS = ("relu", "tanh")
HEADS = ("linear", "tanh")

_net_ids = itertools.count()


@dataclass
class AdamConfig:
    """Adam 설정"""

    lr: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"학습률은 양수여야 함: {self.lr}")


@dataclass
class AdamMoments:
    """파라미터별 Adam 1차/2차 모멘트와 step 카운터"""

    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamMoments":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_update(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    moments: AdamMoments,
    cfg: AdamConfig
):
    """
    편향 보정 Adam 갱신 (제자리 수정)

    Args:
        params: 파라미터 배열들
        grads: 같은 shape 의 기울기
        moments: Adam 모멘트 (갱신됨)
        cfg: Adam 설정
    """
    moments.step += 1
    t = moments.step
    corr1 = 1.0 - cfg.beta1 ** t
    corr2 = 1.0 - cfg.beta2 ** t
    for p, g, m, v in zip(params, grads, moments.m, moments.v):
        if p.shape != g.shape:
            raise ShapeError(f"기울기 shape 불일치: {g.shape} vs {p.shape}")
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        p -= cfg.lr * (m / corr1) / (np.sqrt(v / corr2) + cfg.eps)


@dataclass
class MlpParams:
    """
    완전연결 신경망 파라미터

    Attributes:
        weights: 층별 가중치 (d_k × d_{k-1})
        biases: 층별 편향 (d_k)
        activations: 은닉층별 활성화 ("relu" | "tanh")
        head: 출력 헤드 ("linear" | "tanh"), tanh 는 head_scale 로 스케일
        head_scale: tanh 헤드 스케일 (행동 상한 a_max)
        adam: Adam 모멘트
        version: 파라미터가 바뀔 때마다 증가 (forward 캐시 검증용)
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activations: List[str]
    head: str = "linear"
    head_scale: float = 1.0
    adam: Optional[AdamMoments] = None
    version: int = 0
    uid: int = field(default_factory=lambda: next(_net_ids))

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or len(self.activations) != len(self.weights) - 1:
            raise ShapeError("층 개수와 활성화 개수가 맞지 않음")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[0],):
                raise ShapeError(f"{k}번째 층 편향 shape 오류: {b.shape}")
            if k > 0 and w.shape[1] != self.weights[k - 1].shape[0]:
                raise ShapeError(f"{k}번째 층 입력 차원 불일치: {w.shape[1]} vs {self.weights[k - 1].shape[0]}")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ShapeError(f"알 수 없는 활성화: {act}")
        if self.head not in HEADS:
            raise ShapeError(f"알 수 없는 출력 헤드: {self.head}")
        if self.adam is None:
            self.adam = AdamMoments.zeros_like(self.parameters())

    @property
    def dims(self) -> List[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    def parameters(self) -> List[np.ndarray]:
        """[W1, b1, W2, b2, ...] 순서의 파라미터 목록 (참조)"""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def copy(self) -> "MlpParams":
        """깊은 복사 (새 uid)"""
        clone = copy.deepcopy(self)
        clone.uid = next(_net_ids)
        return clone

    def to_dict(self) -> Dict[str, Any]:
        """체크포인트 직렬화 (float64 리틀엔디언 base64)"""
        return {
            "dims": self.dims,
            "activations": list(self.activations),
            "head": self.head,
            "head_scale": self.head_scale,
            "parameters": [encode_array(p) for p in self.parameters()],
            "adam_m": [encode_array(m) for m in self.adam.m],
            "adam_v": [encode_array(v) for v in self.adam.v],
            "adam_step": self.adam.step,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MlpParams":
        try:
            dims = data["dims"]
            shapes = []
            for d_in, d_out in zip(dims[:-1], dims[1:]):
                shapes.extend([(d_out, d_in), (d_out,)])
            params = [decode_array(text, shape) for text, shape in zip(data["parameters"], shapes)]
            moments = AdamMoments(
                [decode_array(text, shape) for text, shape in zip(data["adam_m"], shapes)],
                [decode_array(text, shape) for text, shape in zip(data["adam_v"], shapes)],
                int(data["adam_step"]),
            )
            return cls(
                weights=params[0::2],
                biases=params[1::2],
                activations=list(data["activations"]),
                head=data.get("head", "linear"),
                head_scale=float(data.get("head_scale", 1.0)),
                adam=moments,
            )
        except (KeyError, ValueError, ShapeError) as e:
            raise CheckpointError(f"네트워크 체크포인트 로드 실패: {e}") from None


@dataclass
class ForwardCache:
    """역전파용 forward 중간값"""

    inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    head_pre: np.ndarray
    uid: int
    version: int


@dataclass
class Gradients:
    """파라미터 기울기와 입력 기울기"""

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    input: np.ndarray

    def as_list(self) -> List[np.ndarray]:
        grads = []
        for w, b in zip(self.weights, self.biases):
            grads.extend([w, b])
        return grads


def _activate(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_grad(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return (z > 0.0).astype(np.float64)
    return 1.0 - np.tanh(z) ** 2


def forward(net: MlpParams, x: np.ndarray):
    """
    순전파: 은닉층은 활성화, 마지막 층은 affine (+ 선택적 tanh 헤드)

    Args:
        net: 네트워크
        x: 입력 (d_0,) 또는 (B, d_0)

    Returns:
        (출력, ForwardCache). 출력 shape 은 입력의 배치 여부를 따른다.

    Raises:
        ShapeError: 입력 차원 불일치
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.ndim != 2 or h.shape[1] != net.input_dim:
        raise ShapeError(f"입력 차원 오류: {x.shape} (예상: (*, {net.input_dim}))")

    inputs = []
    pre_activations = []
    n_layers = len(net.weights)
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        z = h @ w.T + b
        if k < n_layers - 1:
            pre_activations.append(z)
            h = _activate(z, net.activations[k])
        else:
            head_pre = z

    out = net.head_scale * np.tanh(head_pre) if net.head == "tanh" else head_pre
    cache = ForwardCache(inputs, pre_activations, head_pre, net.uid, net.version)
    return (out[0] if single else out), cache


def backward(net: MlpParams, cache: ForwardCache, out_grad: np.ndarray) -> Gradients:
    """
    역전파: 스칼라 손실의 출력 기울기로부터 모든 파라미터와 입력의 기울기

    Args:
        net: 네트워크 (forward 시점과 동일해야 함)
        cache: forward 캐시
        out_grad: ∂L/∂출력, 출력과 같은 shape

    Returns:
        Gradients

    Raises:
        CacheError: 캐시가 다른 네트워크 또는 이전 버전의 것
    """
    if cache.uid != net.uid or cache.version != net.version:
        raise CacheError("forward 캐시가 현재 네트워크와 맞지 않음 (stale cache)")

    g = np.asarray(out_grad, dtype=np.float64)
    single = g.ndim == 1
    if single:
        g = g[None, :]
    if g.shape != cache.head_pre.shape:
        raise ShapeError(f"출력 기울기 shape 오류: {g.shape} (예상: {cache.head_pre.shape})")

    if net.head == "tanh":
        g = g * net.head_scale * (1.0 - np.tanh(cache.head_pre) ** 2)

    n_layers = len(net.weights)
    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        grad_w[k] = g.T @ cache.inputs[k]
        grad_b[k] = g.sum(axis=0)
        g = g @ net.weights[k]
        if k > 0:
            g = g * _activate_grad(cache.pre_activations[k - 1], net.activations[k - 1])

    return Gradients(grad_w, grad_b, g[0] if single else g)


def adam_step(net: MlpParams, grads: Gradients, cfg: AdamConfig) -> MlpParams:
    """
    Adam 한 step (제자리 갱신, version 증가)

    Args:
        net: 네트워크
        grads: backward 결과
        cfg: Adam 설정

    Returns:
        갱신된 네트워크 (같은 객체)
    """
    adam_update(net.parameters(), grads.as_list(), net.adam, cfg)
    net.version += 1
    return net


def xavier_init(
    dims: Sequence[int],
    rng: np.random.Generator,
    activations: Optional[Sequence[str]] = None,
    head: str = "linear",
    head_scale: float = 1.0
) -> MlpParams:
    """
    Xavier 균등 초기화: W ~ U(−√(6/(d_in+d_out)), +√(6/(d_in+d_out))), b = 0

    Args:
        dims: [d_0, d_1, ..., d_K]
        rng: 난수 생성기
        activations: 은닉층 활성화 (기본 전부 relu)
        head: 출력 헤드
        head_scale: tanh 헤드 스케일

    Returns:
        MlpParams
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ShapeError(f"잘못된 네트워크 차원: {dims}")
    weights = []
    biases = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-limit, limit, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    if activations is None:
        activations = ["relu"] * (len(dims) - 2)
    return MlpParams(weights, biases, list(activations), head, head_scale)


def polyak_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """
    target ← τ·online + (1−τ)·target (원소별, 제자리)

    Raises:
        ShapeError: 두 네트워크 구조가 다름
    """
    if target.dims != online.dims:
        raise ShapeError(f"polyak 대상 구조 불일치: {target.dims} vs {online.dims}")
    for t, o in zip(target.parameters(), online.parameters()):
        t *= (1.0 - tau)
        t += tau * o
    target.version += 1
    return target
