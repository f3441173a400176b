"""
拟合结果
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from core.errors import InvariantError
from .enums import FitKind


@dataclass
class FitResult:
    """一次拟合的参数、目标值与计数"""
    kind: FitKind
    parameters: Dict[str, Any]
    objective: float
    iterations: int = 0
    evaluations: int = 0
    seed: Optional[int] = None
    wall_time: float = 0.0
    flags: Dict[str, bool] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.objective) and self.objective >= 0):
            raise InvariantError("objective finite and non-negative", f"objective={self.objective}")

    @property
    def flagged(self) -> bool:
        """是否带有任何告警标记"""
        return any(self.flags.values())

    def to_dict(self) -> Dict[str, Any]:
        """转换为可 JSON 序列化的字典"""
        return {
            "kind": self.kind.value,
            "parameters": self.parameters,
            "objective": self.objective,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "flags": dict(self.flags),
            "extras": self.extras,
        }
