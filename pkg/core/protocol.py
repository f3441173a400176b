"""
恢复比例协议 WB1 -> RB -> WB2 与间歇力竭协议

对任意模型句柄统一实现：W'bal 模型与液压模型都提供
reset / step / run / advance / snapshot / restore。
"""

import logging
from typing import Any, List, Optional, Protocol, Sequence

import numpy as np

from core.errors import InvariantError, SustainableIntensityError
from core.hydraulic import DEFAULT_T_MAX, HydraulicModel, batch_recovery_ratios
from core.wbal import DEFAULT_DT, TauFunction, WbalModel
from models.athlete import AthleteCapacity, StudyDataset
from models.enums import ModelKind
from models.hydraulic_config import HydraulicConfig

logger = logging.getLogger(__name__)


class ModelHandle(Protocol):
    """统一的模拟接口"""

    @property
    def exhausted(self) -> bool: ...

    @property
    def time(self) -> float: ...

    def reset(self) -> None: ...

    def step(self, p: float, dt: float) -> bool: ...

    def run(self, p: float, duration: float, dt: float) -> Optional[float]: ...

    def advance(self, p: float, duration: float, dt: float) -> None: ...

    def snapshot(self) -> Any: ...

    def restore(self, snapshot: Any) -> None: ...

    def describe(self) -> str: ...


def build_model(kind: ModelKind, athlete: AthleteCapacity,
                config: Optional[HydraulicConfig] = None) -> ModelHandle:
    """按模型类型创建句柄"""
    if kind is ModelKind.HYDRAULIC:
        if config is None:
            raise InvariantError("hydraulic model needs a config")
        return HydraulicModel(config)
    return WbalModel(athlete, TauFunction.for_model(kind, athlete))


def time_to_exhaustion(model: ModelHandle, p: float, dt: float = DEFAULT_DT,
                       t_max: float = DEFAULT_T_MAX) -> float:
    """从当前状态以恒定功率运行至力竭"""
    tte = model.run(p, t_max, dt)
    if tte is None:
        raise SustainableIntensityError(p, t_max)
    return tte


def _check_protocol(p_work: float, p_rec: float):
    if not p_rec < p_work:
        raise InvariantError("p_rec < p_work", f"p_rec={p_rec}, p_work={p_work}")


def recovery_ratio(model: ModelHandle, p_work: float, p_rec: float, t_rec: float,
                   dt: float = DEFAULT_DT, t_max: float = DEFAULT_T_MAX) -> float:
    """TTE(WB2) / TTE(WB1) * 100"""
    _check_protocol(p_work, p_rec)
    if t_rec < 0:
        raise InvariantError("t_rec >= 0", f"t_rec={t_rec}")
    model.reset()
    tte1 = time_to_exhaustion(model, p_work, dt, t_max)
    model.advance(p_rec, t_rec, dt)
    tte2 = time_to_exhaustion(model, p_work, dt, t_max)
    return tte2 / tte1 * 100.0


def recovery_curve(model: ModelHandle, p_work: float, p_rec: float, t_rec_grid: Sequence[float],
                   dt: float = DEFAULT_DT, t_max: float = DEFAULT_T_MAX) -> List[float]:
    """一组恢复时长上的恢复比例

    WB1 只模拟一次；恢复段按时长升序增量推进，每个点从快照出发跑 WB2。
    """
    _check_protocol(p_work, p_rec)
    grid = [float(t) for t in t_rec_grid]
    if not grid:
        return []
    if min(grid) < 0:
        raise InvariantError("t_rec >= 0", f"t_rec={min(grid)}")

    model.reset()
    tte1 = time_to_exhaustion(model, p_work, dt, t_max)
    ratios = [0.0] * len(grid)
    elapsed = 0.0
    for index in sorted(range(len(grid)), key=lambda i: grid[i]):
        model.advance(p_rec, grid[index] - elapsed, dt)
        elapsed = grid[index]
        snapshot = model.snapshot()
        tte2 = time_to_exhaustion(model, p_work, dt, t_max)
        ratios[index] = tte2 / tte1 * 100.0
        model.restore(snapshot)
    return ratios


def intermittent_tte(model: ModelHandle, p_work: float, p_rec: float, work_dur: float, rec_dur: float,
                     dt: float = DEFAULT_DT, t_max: float = DEFAULT_T_MAX) -> float:
    """做功/恢复交替直至力竭的总时长"""
    _check_protocol(p_work, p_rec)
    if work_dur <= 0 or rec_dur < 0:
        raise InvariantError("work_dur > 0 and rec_dur >= 0", f"work_dur={work_dur}, rec_dur={rec_dur}")
    model.reset()
    elapsed = 0.0
    while elapsed < t_max:
        bout = min(work_dur, t_max - elapsed)
        tte = model.run(p_work, bout, dt)
        if tte is not None:
            return elapsed + tte
        elapsed += bout
        if rec_dur > 0:
            model.advance(p_rec, rec_dur, dt)
            elapsed += rec_dur
    raise SustainableIntensityError(p_work, t_max)


def predict_dataset(dataset: StudyDataset, kind: ModelKind, dt: float = DEFAULT_DT,
                    t_max: float = DEFAULT_T_MAX) -> List[float]:
    """数据集每一行的预测恢复比例

    液压模型对所有行一次批量模拟。
    """
    trials = dataset.trials
    if kind is ModelKind.HYDRAULIC:
        if dataset.fitted_hydraulic is None:
            raise InvariantError("dataset has a hydraulic config", dataset.name)
        params = np.tile(dataset.fitted_hydraulic.as_array(), (len(trials), 1))
        ratios, _, _ = batch_recovery_ratios(
            params,
            [t.p_work for t in trials],
            [t.p_rec for t in trials],
            [t.t_rec for t in trials],
            dt=dt, t_max=t_max,
        )
        if np.any(np.isnan(ratios)):
            bad = int(np.argmax(np.isnan(ratios)))
            raise SustainableIntensityError(trials[bad].p_work, t_max)
        return [float(r) for r in ratios]

    model = build_model(kind, dataset.athlete)
    return [recovery_ratio(model, t.p_work, t.p_rec, t.t_rec, dt, t_max) for t in trials]
