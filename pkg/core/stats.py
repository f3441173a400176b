"""
误差指标与统计检验

MAE、RMSE、绝对误差标准差、AICc 以及比较两个模型误差分布的自助法检验。
残差符号约定为 预测 - 观测，单位为百分点。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from core.batch_processor import BatchProcessor
from core.errors import InvariantError
from models.enums import Statistic

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 50_000
SD_DDOF = 1


@dataclass
class ErrorVector:
    """带来源标注的残差向量"""
    residuals: np.ndarray
    labels: List[Tuple[str, int]] = field(default_factory=list)

    def __post_init__(self):
        self.residuals = np.asarray(self.residuals, dtype=float).ravel()
        if self.labels and len(self.labels) != len(self.residuals):
            raise InvariantError("one label per residual")

    @classmethod
    def from_predictions(cls, dataset: str, predicted: Sequence[float], observed: Sequence[float]) -> 'ErrorVector':
        """由预测值与观测值构造"""
        if len(predicted) != len(observed):
            raise InvariantError("predicted and observed have equal length")
        residuals = np.asarray(predicted, dtype=float) - np.asarray(observed, dtype=float)
        return cls(residuals, [(dataset, i) for i in range(len(residuals))])

    @classmethod
    def concat(cls, vectors: Sequence['ErrorVector']) -> 'ErrorVector':
        """拼接多个数据集的残差"""
        if not vectors:
            return cls(np.empty(0))
        residuals = np.concatenate([v.residuals for v in vectors])
        labels = [label for v in vectors for label in v.labels]
        return cls(residuals, labels if len(labels) == len(residuals) else [])

    def __len__(self) -> int:
        return len(self.residuals)


def _values(errors) -> np.ndarray:
    values = errors.residuals if isinstance(errors, ErrorVector) else np.asarray(errors, dtype=float).ravel()
    if values.size == 0:
        raise InvariantError("error vector non-empty")
    return values


def mae(errors) -> float:
    """平均绝对误差"""
    return float(np.mean(np.abs(_values(errors))))


def mse(errors) -> float:
    """均方误差"""
    return float(np.mean(_values(errors) ** 2))


def rmse(errors) -> float:
    """均方根误差"""
    return math.sqrt(mse(errors))


def sd_abs(errors) -> float:
    """绝对误差的样本标准差，单个残差时为 0"""
    values = np.abs(_values(errors))
    if values.size <= SD_DDOF:
        return 0.0
    return float(np.std(values, ddof=SD_DDOF))


def aicc(errors, k: int) -> float:
    """修正的赤池信息准则 n*ln(MSE) + 2k + 2k(k+1)/(n-k-1)"""
    n = _values(errors).size
    if n <= k + 1:
        raise InvariantError("n > k + 1", f"n={n}, k={k}")
    value = mse(errors)
    if value <= 0:
        raise InvariantError("MSE > 0", "ln(0) undefined")
    return n * math.log(value) + 2 * k + 2 * k * (k + 1) / (n - k - 1)


def _statistic(statistic: Statistic, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """按行计算 |统计量差|，a、b 形状为 (m, n_a)、(m, n_b)"""
    if statistic is Statistic.DELTA_MAE:
        return np.abs(np.mean(np.abs(a), axis=-1) - np.mean(np.abs(b), axis=-1))
    return np.abs(np.sqrt(np.mean(a ** 2, axis=-1)) - np.sqrt(np.mean(b ** 2, axis=-1)))


def _count_chunk(task) -> int:
    pooled, n_a, n_b, size, seed, statistic, observed = task
    rng = np.random.default_rng(seed)
    a = pooled[rng.integers(len(pooled), size=(size, n_a))]
    b = pooled[rng.integers(len(pooled), size=(size, n_b))]
    return int(np.count_nonzero(_statistic(statistic, a, b) >= observed))


def bootstrap_test(errors_a, errors_b, statistic: Statistic = Statistic.DELTA_MAE, samples: int = 1_000_000,
                   seed: int = 0, chunk_size: int = DEFAULT_CHUNK, workers: int = None) -> float:
    """零假设为两组误差同分布的自助法检验，返回 p 值

    合并两组误差，有放回地重抽与原样本同样大小的两组，
    p 为重抽统计量不小于观测统计量的比例（不做 +1 平滑）。
    每个分块使用从 seed 派生的独立随机流，结果与工作线程数无关。
    """
    a = _values(errors_a)
    b = _values(errors_b)
    if samples < 1:
        raise InvariantError("samples >= 1", f"samples={samples}")
    statistic = Statistic(statistic)

    observed = float(_statistic(statistic, a[None, :], b[None, :])[0])
    # 浮点误差内相等视为不小于
    threshold = observed - 1e-12 * max(1.0, observed)
    pooled = np.concatenate([a, b])

    sizes = [chunk_size] * (samples // chunk_size)
    if samples % chunk_size:
        sizes.append(samples % chunk_size)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    tasks = [(pooled, len(a), len(b), size, s, statistic, threshold) for size, s in zip(sizes, seeds)]

    counts = BatchProcessor(max_workers=workers).map(_count_chunk, tasks)
    p_value = sum(counts) / samples
    logger.info(f"自助法检验 {statistic.value}: 观测值 {observed:.3f}, p = {p_value:.3f} ({samples} 次重抽)")
    return p_value
