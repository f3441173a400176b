"""
三罐液压模型的配置与状态

几何约定：总高度归一化为 1，高度从 AnF 底部量起。
AnF 占满 [0, 1]，截面积为 an_f；
AnS 顶部距总顶部 phi，底部位于 theta，高度为 1 - phi - theta，截面积为 an_s；
Ae 管道出口位于 gamma。已发表的配置中出口均高于 AnS 底部。
"""

import json
import math
from dataclasses import dataclass, fields
from typing import List, Sequence

import numpy as np

from core.errors import InvariantError

PARAMETER_NAMES = ("an_f", "an_s", "m_ae", "m_ans", "m_anf", "phi", "theta", "gamma")


@dataclass(frozen=True)
class HydraulicConfig:
    """8 参数配置，顺序 [an_f, an_s, m_ae, m_ans, m_anf, phi, theta, gamma]"""
    an_f: float
    an_s: float
    m_ae: float
    m_ans: float
    m_anf: float
    phi: float
    theta: float
    gamma: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise InvariantError(f"{f.name} finite", f"{f.name}={value}")
        for name in ("an_f", "an_s", "m_ae", "m_ans", "m_anf"):
            if getattr(self, name) <= 0:
                raise InvariantError(f"{name} > 0", f"{name}={getattr(self, name)}")
        for name in ("phi", "theta", "gamma"):
            if not 0 <= getattr(self, name) < 1:
                raise InvariantError(f"0 <= {name} < 1", f"{name}={getattr(self, name)}")
        if self.phi + self.theta >= 1:
            raise InvariantError("phi + theta < 1", f"phi={self.phi}, theta={self.theta}")

    @property
    def height_ans(self) -> float:
        """AnS 的高度"""
        return 1.0 - self.phi - self.theta

    @property
    def pipe_below_ans(self) -> bool:
        """Ae 管道出口不高于 AnS 底部"""
        return self.gamma <= self.theta

    def to_list(self) -> List[float]:
        return [float(getattr(self, name)) for name in PARAMETER_NAMES]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.to_list(), dtype=float)

    @classmethod
    def from_list(cls, values: Sequence[float]) -> 'HydraulicConfig':
        """从 8 个数的序列创建"""
        values = list(values)
        if len(values) != len(PARAMETER_NAMES):
            raise InvariantError("config has 8 values", f"got {len(values)}")
        return cls(*(float(v) for v in values))

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_json(cls, text: str) -> 'HydraulicConfig':
        try:
            values = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvariantError("config is a JSON array", str(e)) from e
        if not isinstance(values, list):
            raise InvariantError("config is a JSON array", type(values).__name__)
        return cls.from_list(values)


@dataclass(frozen=True)
class HydraulicState:
    """罐体状态：h 为 AnF 距顶部的耗竭深度，g 为 AnS 距其顶部的耗竭深度

    p_ae、p_an 为最近一步的 Ae 流入与 AnS->AnF 流量（负值表示回灌 AnS）。
    """
    h: float = 0.0
    g: float = 0.0
    time: float = 0.0
    exhausted: bool = False
    p_ae: float = 0.0
    p_an: float = 0.0

    def check(self, config: HydraulicConfig):
        """检查状态在配置允许的范围内"""
        if not 0 <= self.h <= 1:
            raise InvariantError("0 <= h <= 1", f"h={self.h}")
        if not 0 <= self.g <= config.height_ans:
            raise InvariantError("0 <= g <= height_ans", f"g={self.g}")

    def stored_energy(self, config: HydraulicConfig) -> float:
        """AnF 与 AnS 中剩余的能量 (J)"""
        return config.an_f * (1.0 - self.h) + config.an_s * (config.height_ans - self.g)

    def w_p_ratio(self, config: HydraulicConfig) -> float:
        """与 W'bal 可比的剩余无氧能力比例"""
        return (1.0 - self.h) * (config.height_ans - self.g) / config.height_ans
