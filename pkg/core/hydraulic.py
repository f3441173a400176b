"""
三罐液压模型

Ae 为无限容量的有氧罐，AnF 为快速无氧罐，AnS 为慢速无氧罐。
功率需求从 AnF 底部流出，AnF 液面下降后引起 Ae 与 AnS 的补充流。
AnF 液面降到底部 (h >= 1) 即视为力竭。

单步更新为显式欧拉格式，数组化实现，标量接口和批量接口共用同一个内核。
"""

import logging
from typing import Optional, Tuple

import numpy as np

from core.errors import InvariantError, SustainableIntensityError
from models.enums import Phase
from models.hydraulic_config import HydraulicConfig, HydraulicState

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.1
DEFAULT_T_MAX = 7200.0


class _Geometry:
    """按列展开的配置数组，形状均为 (n,)"""

    def __init__(self, params: np.ndarray):
        params = np.atleast_2d(np.asarray(params, dtype=float))
        if params.shape[1] != 8:
            raise InvariantError("config has 8 values", f"shape={params.shape}")
        (self.an_f, self.an_s, self.m_ae, self.m_ans, self.m_anf,
         self.phi, self.theta, self.gamma) = (params[:, i].copy() for i in range(8))
        self.height = 1.0 - self.phi - self.theta
        if np.any(self.height <= 0):
            raise InvariantError("phi + theta < 1")
        self.size = params.shape[0]


def _kernel(h: np.ndarray, g: np.ndarray, p: np.ndarray, dt: float, geo: _Geometry):
    """一步更新，返回未截断的 h、g 以及 Ae 与 AnS 的流量"""
    # 需求先降低 AnF 液面
    h = h + p * dt / geo.an_f

    # Ae 流入与液面到管道出口的深度成正比，出口以下为满流量
    pipe = 1.0 - geo.gamma
    p_ae = np.where(h < pipe, geo.m_ae * h / pipe, geo.m_ae)

    # AnS 与 AnF 之间的双向流
    # phi 为顶部到 AnS 顶部的距离，theta 为 AnS 底部高度
    ans_level = g + geo.phi
    ans_bottom = 1.0 - geo.theta
    idle = (((h <= geo.phi) & (g == 0))
            | ((h >= ans_bottom) & (g >= geo.height))
            | (h == ans_level))
    restore = ~idle & (h < ans_level) & (g > 0)
    drain = ~idle & ~restore & (ans_level < h) & (h < ans_bottom)
    drain_max = ~idle & ~restore & ~drain & (h >= ans_bottom) & (g < geo.height)
    p_an = np.select(
        [restore, drain, drain_max],
        [-geo.m_anf * (ans_level - h) / ans_bottom,
         geo.m_ans * (h - ans_level) / geo.height,
         geo.m_ans * (geo.height - g) / geo.height],
        default=0.0,
    )

    # 一步之内两罐液面不能交换位置，也不能超出 AnS 的剩余容量
    m_flow = (h - ans_level) / (1.0 / geo.an_s + 1.0 / geo.an_f)
    p_an = np.where(p_an < 0, np.maximum(np.maximum(p_an, m_flow), -g * geo.an_s), p_an)
    p_an = np.where(p_an > 0, np.minimum(np.minimum(p_an, m_flow), (geo.height - g) * geo.an_s), p_an)

    g = g + p_an * dt / geo.an_s
    h = h - (p_ae + p_an) * dt / geo.an_f
    return h, g, p_ae, p_an


class HydraulicBatch:
    """一组配置同步推进的模拟器"""

    def __init__(self, params):
        self.geo = _Geometry(params)
        self.size = self.geo.size
        self.h = np.zeros(self.size)
        self.g = np.zeros(self.size)
        self.p_ae = np.zeros(self.size)
        self.p_an = np.zeros(self.size)

    def reset(self):
        self.h[:] = 0.0
        self.g[:] = 0.0
        self.p_ae[:] = 0.0
        self.p_an[:] = 0.0

    def step(self, power, dt: float, active: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """推进一步，返回 (本步力竭标记, 力竭发生在本步内的比例)

        active 为 False 的成员保持不变。
        """
        power = np.broadcast_to(np.asarray(power, dtype=float), (self.size,))
        h_prev = self.h
        h_raw, g_raw, p_ae, p_an = _kernel(self.h, self.g, power, dt, self.geo)
        exhausted = h_raw >= 1.0
        with np.errstate(divide='ignore', invalid='ignore'):
            frac = np.where(h_raw > h_prev, (1.0 - h_prev) / (h_raw - h_prev), 0.0)
        frac = np.clip(np.nan_to_num(frac), 0.0, 1.0)
        h_new = np.clip(h_raw, 0.0, 1.0)
        g_new = np.clip(g_raw, 0.0, self.geo.height)
        if active is None:
            active = np.ones(self.size, dtype=bool)
        self.h = np.where(active, h_new, self.h)
        self.g = np.where(active, g_new, self.g)
        self.p_ae = np.where(active, p_ae, self.p_ae)
        self.p_an = np.where(active, p_an, self.p_an)
        return exhausted & active, frac


def hydraulic_step(state: HydraulicState, config: HydraulicConfig, p_t: float,
                   dt: float = DEFAULT_DT) -> HydraulicState:
    """单步更新"""
    if dt <= 0:
        raise InvariantError("dt > 0", f"dt={dt}")
    batch = HydraulicBatch(config.as_array())
    batch.h[0] = state.h
    batch.g[0] = state.g
    exhausted, _ = batch.step(p_t, dt)
    return HydraulicState(
        h=float(batch.h[0]),
        g=float(batch.g[0]),
        time=state.time + dt,
        exhausted=bool(exhausted[0]),
        p_ae=float(batch.p_ae[0]),
        p_an=float(batch.p_an[0]),
    )


class HydraulicModel:
    """液压模型句柄，固定步长模拟"""

    def __init__(self, config: HydraulicConfig):
        self.config = config
        self._batch = HydraulicBatch(config.as_array())
        self._time = 0.0
        self._exhausted = False

    @property
    def state(self) -> HydraulicState:
        return HydraulicState(
            h=float(self._batch.h[0]),
            g=float(self._batch.g[0]),
            time=self._time,
            exhausted=self._exhausted,
            p_ae=float(self._batch.p_ae[0]),
            p_an=float(self._batch.p_an[0]),
        )

    @property
    def exhausted(self) -> bool:
        return self._exhausted

    @property
    def time(self) -> float:
        return self._time

    def reset(self):
        self._batch.reset()
        self._time = 0.0
        self._exhausted = False

    def step(self, p: float, dt: float = DEFAULT_DT) -> bool:
        exhausted, _ = self._batch.step(p, dt)
        self._time += dt
        self._exhausted = bool(exhausted[0])
        return self._exhausted

    def run(self, p: float, duration: float, dt: float = DEFAULT_DT) -> Optional[float]:
        """以恒定功率 p 运行 duration 秒，力竭时停止并返回已用时间（精确到步内比例），否则返回 None"""
        if duration < 0:
            raise InvariantError("duration >= 0", f"duration={duration}")
        start = self._time
        for i in range(int(round(duration / dt))):
            exhausted, frac = self._batch.step(p, dt)
            if exhausted[0]:
                elapsed = (i + float(frac[0])) * dt
                self._time = start + elapsed
                self._exhausted = True
                return elapsed
            self._exhausted = False
        self._time = start + duration
        return None

    def advance(self, p: float, duration: float, dt: float = DEFAULT_DT):
        """运行 duration 秒，力竭后不停止"""
        exhausted = False
        for _ in range(int(round(duration / dt))):
            flags, _ = self._batch.step(p, dt)
            exhausted = bool(flags[0])
        self._time += duration
        if duration > 0:
            self._exhausted = exhausted

    def snapshot(self) -> HydraulicState:
        return self.state

    def restore(self, snapshot: HydraulicState):
        self._batch.h[0] = snapshot.h
        self._batch.g[0] = snapshot.g
        self._batch.p_ae[0] = snapshot.p_ae
        self._batch.p_an[0] = snapshot.p_an
        self._time = snapshot.time
        self._exhausted = snapshot.exhausted

    def describe(self) -> str:
        return "hydraulic"


def simulate_tte(config: HydraulicConfig, p: float, dt: float = DEFAULT_DT,
                 t_max: float = DEFAULT_T_MAX) -> float:
    """从满罐开始以恒定功率 p 运行至力竭的时间"""
    if p <= 0:
        raise InvariantError("p > 0", f"p={p}")
    model = HydraulicModel(config)
    tte = model.run(p, t_max, dt)
    if tte is None:
        raise SustainableIntensityError(p, t_max)
    return tte


def batch_tte(params, power, dt: float = DEFAULT_DT, t_max: float = DEFAULT_T_MAX) -> np.ndarray:
    """批量力竭时间，未力竭的成员为 NaN"""
    batch = HydraulicBatch(params)
    power = np.broadcast_to(np.asarray(power, dtype=float), (batch.size,))
    tte = np.full(batch.size, np.nan)
    active = np.ones(batch.size, dtype=bool)
    for i in range(int(round(t_max / dt))):
        exhausted, frac = batch.step(power, dt, active)
        tte[exhausted] = (i + frac[exhausted]) * dt
        active &= ~exhausted
        if not active.any():
            break
    return tte


def batch_recovery_ratios(params, p_work, p_rec, t_rec, dt: float = DEFAULT_DT,
                          t_max: float = DEFAULT_T_MAX) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """批量执行 WB1 -> RB -> WB2 协议

    每个成员可有各自的 p_work、p_rec 与 t_rec。t_max 限制每个做功段的时长。
    返回 (恢复比例 %, WB1 时间, WB2 时间)，失败的成员为 NaN。
    """
    batch = HydraulicBatch(params)
    n = batch.size
    p_work = np.broadcast_to(np.asarray(p_work, dtype=float), (n,))
    p_rec = np.broadcast_to(np.asarray(p_rec, dtype=float), (n,))
    rec_steps = np.rint(np.broadcast_to(np.asarray(t_rec, dtype=float), (n,)) / dt).astype(int)
    max_steps = int(round(t_max / dt))

    phase = np.full(n, int(Phase.WB1))
    counter = np.zeros(n, dtype=int)
    tte1 = np.full(n, np.nan)
    tte2 = np.full(n, np.nan)

    while True:
        # 恢复时长为 0 的成员直接进入 WB2
        skip = (phase == Phase.RB) & (counter >= rec_steps)
        phase[skip] = Phase.WB2
        counter[skip] = 0

        active = (phase == Phase.WB1) | (phase == Phase.RB) | (phase == Phase.WB2)
        if not active.any():
            break
        power = np.where(phase == Phase.RB, p_rec, p_work)
        exhausted, frac = batch.step(power, dt, active)
        counter[active] += 1

        in_wb1 = phase == Phase.WB1
        in_wb2 = phase == Phase.WB2
        done1 = in_wb1 & exhausted
        done2 = in_wb2 & exhausted
        tte1[done1] = (counter[done1] - 1 + frac[done1]) * dt
        tte2[done2] = (counter[done2] - 1 + frac[done2]) * dt
        timeout = (in_wb1 | in_wb2) & ~exhausted & (counter >= max_steps)
        rb_done = (phase == Phase.RB) & (counter >= rec_steps)

        phase[rb_done] = Phase.WB2
        counter[rb_done] = 0
        phase[done1] = Phase.RB
        counter[done1] = 0
        phase[done2] = Phase.DONE
        phase[timeout] = Phase.FAILED

    failed = int(np.sum(phase == Phase.FAILED))
    if failed:
        logger.debug(f"{failed}/{n} 个协议在 {t_max:.0f} s 内未力竭")
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = tte2 / tte1 * 100.0
    return ratio, tte1, tte2
