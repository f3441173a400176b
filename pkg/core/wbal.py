"""
临界功率模型与 W'bal-ode 恢复模型

CP 以上 W' 线性消耗，CP 以下按时间常数 τ 指数恢复。
τ 规则可替换：skib、bart、weig、常数或一般指数形式。
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

from core.errors import InvariantError, SustainableIntensityError, TauDomainError
from models.athlete import AthleteCapacity
from models.enums import ModelKind, TauKind

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.1

BART_SCALE = 2287.2
BART_EXPONENT = -0.688
WEIG_A = 1274.45
WEIG_B = -0.0308
WEIG_C = 266.65


@dataclass(frozen=True)
class TauFunction:
    """把 D_CP 映射为恢复时间常数 τ (秒) 的规则"""
    kind: TauKind
    value: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    w_prime: Optional[float] = None

    def __post_init__(self):
        if self.kind is TauKind.CONSTANT:
            if self.value is None or not (math.isfinite(self.value) and self.value > 0):
                raise InvariantError("constant tau > 0", f"value={self.value}")
        elif self.kind is TauKind.EXPONENTIAL:
            if self.a is None or self.b is None or self.c is None:
                raise InvariantError("exponential tau needs a, b, c")
            if self.a < 0 or self.c <= 0:
                raise InvariantError("exponential a >= 0 and c > 0", f"a={self.a}, c={self.c}")
        elif self.kind is TauKind.SKIB:
            if self.w_prime is None or self.w_prime <= 0:
                raise InvariantError("skib tau needs w_prime > 0", f"w_prime={self.w_prime}")

    @classmethod
    def skib(cls, w_prime: float) -> 'TauFunction':
        return cls(TauKind.SKIB, w_prime=w_prime)

    @classmethod
    def bart(cls) -> 'TauFunction':
        return cls(TauKind.BART)

    @classmethod
    def weig(cls) -> 'TauFunction':
        return cls(TauKind.WEIG)

    @classmethod
    def constant(cls, value: float) -> 'TauFunction':
        return cls(TauKind.CONSTANT, value=value)

    @classmethod
    def exponential(cls, a: float, b: float, c: float) -> 'TauFunction':
        return cls(TauKind.EXPONENTIAL, a=a, b=b, c=c)

    @classmethod
    def for_model(cls, model: ModelKind, athlete: AthleteCapacity) -> 'TauFunction':
        """按模型类型创建 τ 规则"""
        if model is ModelKind.WBAL_SKIB:
            return cls.skib(athlete.w_prime)
        if model is ModelKind.WBAL_BART:
            return cls.bart()
        if model is ModelKind.WBAL_WEIG:
            return cls.weig()
        raise InvariantError("model is a W'bal variant", model.value)

    def describe(self) -> str:
        if self.kind is TauKind.CONSTANT:
            return f"constant({self.value:g})"
        if self.kind is TauKind.EXPONENTIAL:
            return f"exponential({self.a:g}, {self.b:g}, {self.c:g})"
        return self.kind.value


@dataclass(frozen=True)
class WbalState:
    """W' 余量 (J) 与已用时间 (s)"""
    balance: float
    time: float = 0.0
    exhausted: bool = False


def cp_tte(athlete: AthleteCapacity, p: float) -> float:
    """CP 模型的力竭时间 W'/(P-CP)"""
    if p <= athlete.cp:
        raise SustainableIntensityError(p, math.inf)
    return athlete.w_prime / (p - athlete.cp)


def tau_at(tau: TauFunction, d_cp: float) -> float:
    """在给定 D_CP 下的 τ"""
    if tau.kind is TauKind.SKIB:
        if d_cp <= 0:
            raise TauDomainError(f"tau_skib 在 D_CP={d_cp} 处无定义")
        return tau.w_prime / d_cp
    if tau.kind is TauKind.BART:
        if d_cp <= 0:
            raise TauDomainError(f"tau_bart 在 D_CP={d_cp} 处无定义")
        return BART_SCALE * d_cp ** BART_EXPONENT
    if tau.kind is TauKind.WEIG:
        return WEIG_A * math.exp(WEIG_B * d_cp) + WEIG_C
    if tau.kind is TauKind.EXPONENTIAL:
        return tau.a * math.exp(tau.b * d_cp) + tau.c
    return tau.value


def _recover(balance: float, athlete: AthleteCapacity, p: float, duration: float, tau: TauFunction) -> float:
    try:
        tau_t = tau_at(tau, athlete.cp - p)
    except TauDomainError:
        # 无定义时不恢复
        return balance
    return athlete.w_prime - (athlete.w_prime - balance) * math.exp(-duration / tau_t)


def wbal_step(state: WbalState, athlete: AthleteCapacity, p_t: float, dt: float, tau: TauFunction) -> WbalState:
    """W'bal-ode 的一步更新"""
    if dt <= 0:
        raise InvariantError("dt > 0", f"dt={dt}")
    if p_t >= athlete.cp:
        balance = state.balance - (p_t - athlete.cp) * dt
        if balance <= 0:
            return WbalState(0.0, state.time + dt, True)
        return WbalState(balance, state.time + dt, False)
    balance = min(_recover(state.balance, athlete, p_t, dt, tau), athlete.w_prime)
    return WbalState(balance, state.time + dt, state.exhausted and balance <= 0)


class WbalModel:
    """W'bal-ode 模型句柄

    默认对恒定功率段用解析解推进，结果与步长无关，dt 参数只为与液压模型的接口一致。
    stepped=True 时按 dt 逐步模拟（力竭时刻在步内插值），拟合常数 τ 时使用。
    """

    def __init__(self, athlete: AthleteCapacity, tau: TauFunction, stepped: bool = False):
        self.athlete = athlete
        self.tau = tau
        self.stepped = stepped
        self._state = WbalState(athlete.w_prime)

    @property
    def state(self) -> WbalState:
        return self._state

    @property
    def exhausted(self) -> bool:
        return self._state.exhausted

    @property
    def time(self) -> float:
        return self._state.time

    def reset(self):
        """恢复到满状态"""
        self._state = WbalState(self.athlete.w_prime)

    def step(self, p: float, dt: float = DEFAULT_DT) -> bool:
        self._state = wbal_step(self._state, self.athlete, p, dt, self.tau)
        return self._state.exhausted

    def run(self, p: float, duration: float, dt: float = DEFAULT_DT) -> Optional[float]:
        """以恒定功率 p 运行 duration 秒，力竭时停止并返回已用时间，否则返回 None"""
        if duration < 0:
            raise InvariantError("duration >= 0", f"duration={duration}")
        if self.stepped:
            return self._run_stepped(p, duration, dt)
        cp = self.athlete.cp
        balance = self._state.balance
        if p > cp:
            t_exhaust = balance / (p - cp)
            if t_exhaust <= duration:
                self._state = WbalState(0.0, self._state.time + t_exhaust, True)
                return t_exhaust
            self._state = WbalState(balance - (p - cp) * duration, self._state.time + duration, False)
            return None
        if p < cp and duration > 0:
            balance = min(_recover(balance, self.athlete, p, duration, self.tau), self.athlete.w_prime)
        self._state = replace(self._state, balance=balance, time=self._state.time + duration,
                              exhausted=self._state.exhausted and balance <= 0)
        return None

    def _run_stepped(self, p: float, duration: float, dt: float) -> Optional[float]:
        if dt <= 0:
            raise InvariantError("dt > 0", f"dt={dt}")
        cp, w_prime = self.athlete.cp, self.athlete.w_prime
        balance = self._state.balance
        steps = int(round(duration / dt))
        if p > cp:
            drain = (p - cp) * dt
            for i in range(steps):
                if balance - drain <= 0:
                    elapsed = (i + balance / drain) * dt
                    self._state = WbalState(0.0, self._state.time + elapsed, True)
                    return elapsed
                balance -= drain
            self._state = WbalState(balance, self._state.time + duration, False)
            return None
        if p < cp:
            try:
                decay = math.exp(-dt / tau_at(self.tau, cp - p))
            except TauDomainError:
                decay = 1.0
            for _ in range(steps):
                balance = w_prime - (w_prime - balance) * decay
            balance = min(balance, w_prime)
        self._state = replace(self._state, balance=balance, time=self._state.time + duration,
                              exhausted=self._state.exhausted and balance <= 0)
        return None

    def advance(self, p: float, duration: float, dt: float = DEFAULT_DT):
        """运行 duration 秒，力竭后不停止"""
        start = self._state.time
        self.run(p, duration, dt)
        # 力竭后 CP 以上的功率保持余量为 0
        self._state = replace(self._state, time=start + duration)

    def snapshot(self) -> WbalState:
        return self._state

    def restore(self, snapshot: WbalState):
        self._state = snapshot

    def describe(self) -> str:
        return f"wbal-{self.tau.describe()}"
