"""
运动员能力、恢复试验与研究数据集
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from core.errors import InvariantError
from .enums import ModelKind, Role


@dataclass(frozen=True)
class AthleteCapacity:
    """临界功率 CP (W) 与无氧做功能力 W' (J)"""
    cp: float
    w_prime: float

    def __post_init__(self):
        if not (math.isfinite(self.cp) and self.cp > 0):
            raise InvariantError("cp > 0", f"cp={self.cp}")
        if not (math.isfinite(self.w_prime) and self.w_prime > 0):
            raise InvariantError("w_prime > 0", f"w_prime={self.w_prime}")

    def power_for_tte(self, seconds: float) -> float:
        """按 CP 模型求在 seconds 秒力竭的功率 (P_t)"""
        if seconds <= 0:
            raise InvariantError("tte > 0", f"tte={seconds}")
        return self.cp + self.w_prime / seconds

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {"cp": self.cp, "w_prime": self.w_prime}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AthleteCapacity':
        """从字典创建"""
        return cls(cp=float(data["cp"]), w_prime=float(data["w_prime"]))


@dataclass(frozen=True)
class RecoveryTrial:
    """一次观测条件：WB1 -> RB -> WB2"""
    p_work: float
    p_rec: float
    t_rec: float
    observed_ratio: float

    def __post_init__(self):
        if not self.t_rec >= 0:
            raise InvariantError("t_rec >= 0", f"t_rec={self.t_rec}")
        if not 0 <= self.observed_ratio <= 100:
            raise InvariantError("0 <= observed_ratio <= 100", f"observed_ratio={self.observed_ratio}")
        if not self.p_rec < self.p_work:
            raise InvariantError("p_rec < p_work", f"p_rec={self.p_rec}, p_work={self.p_work}")

    def check_athlete(self, athlete: AthleteCapacity):
        """检查 p_work 高于运动员 CP"""
        if not self.p_work > athlete.cp:
            raise InvariantError("p_work > cp", f"p_work={self.p_work}, cp={athlete.cp}")

    def d_cp(self, athlete: AthleteCapacity) -> float:
        """恢复功率与 CP 之差"""
        return athlete.cp - self.p_rec

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {
            "p_work": self.p_work,
            "p_rec": self.p_rec,
            "t_rec": self.t_rec,
            "observed_ratio": self.observed_ratio,
        }


@dataclass(frozen=True)
class IntermittentObservation:
    """间歇协议（固定做功/休息时长循环）下的力竭时间观测"""
    label: str
    p_rec: float
    tte: float
    tte_sd: Optional[float] = None
    excluded: bool = False


@dataclass(frozen=True)
class StudyDataset:
    """一项研究的数据：运动员参数、试验行、已发表的拟合配置与预测列"""
    name: str
    athlete: AthleteCapacity
    trials: Tuple[RecoveryTrial, ...]
    fitted_hydraulic: Optional[Any] = None
    role_flags: Dict[str, Role] = field(default_factory=dict)
    published: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    observed_sd: Optional[Tuple[float, ...]] = None
    intermittent: Tuple[IntermittentObservation, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise InvariantError("dataset name non-empty")
        if not self.trials:
            raise InvariantError("trials non-empty", f"dataset={self.name}")
        for trial in self.trials:
            trial.check_athlete(self.athlete)
        for column, values in self.published.items():
            if len(values) != len(self.trials):
                raise InvariantError("published column matches trials", f"{column}: {len(values)} != {len(self.trials)}")

    def role(self, model: ModelKind) -> Role:
        """模型在本数据集上的用途，未标注时视为纯预测"""
        return self.role_flags.get(model.value, Role.PREDICTED)

    def published_column(self, model: ModelKind) -> Optional[Tuple[float, ...]]:
        """已发表的预测列；观测即来自该模型时返回观测值"""
        if model.column in self.published:
            return self.published[model.column]
        if self.role(model) is Role.OBSERVED:
            return self.observed
        return None

    @property
    def observed(self) -> Tuple[float, ...]:
        return tuple(trial.observed_ratio for trial in self.trials)

    def same_observations(self, other: 'StudyDataset') -> bool:
        """名称、运动员参数与试验行一致"""
        return (
            self.name == other.name
            and self.athlete == other.athlete
            and tuple(self.trials) == tuple(other.trials)
        )
