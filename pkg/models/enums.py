"""
枚举定义
"""

from enum import Enum, IntEnum


class TauKind(str, Enum):
    """恢复时间常数规则"""
    SKIB = "skib"                # W'/D_CP
    BART = "bart"                # 幂函数
    WEIG = "weig"                # 指数回归结果
    CONSTANT = "constant"        # 固定常数
    EXPONENTIAL = "exponential"  # a*e^(b*D_CP)+c


class ModelKind(str, Enum):
    """可比较的模型"""
    WBAL_SKIB = "wbal-skib"
    WBAL_BART = "wbal-bart"
    WBAL_WEIG = "wbal-weig"
    HYDRAULIC = "hydraulic"

    @property
    def column(self) -> str:
        """已发表预测列名"""
        return {
            ModelKind.WBAL_SKIB: "skib",
            ModelKind.WBAL_BART: "bart",
            ModelKind.WBAL_WEIG: "weig",
            ModelKind.HYDRAULIC: "hydraulic",
        }[self]

    @property
    def parameter_count(self) -> int:
        """AICc 使用的参数个数"""
        return 8 if self is ModelKind.HYDRAULIC else 3


class Role(str, Enum):
    """模型在数据集上的用途"""
    PREDICTED = "predicted"  # 纯预测
    FITTED = "fitted"        # 参数拟合自该数据集
    OBSERVED = "observed"    # 观测值即来自该模型


class FitKind(str, Enum):
    """拟合类型"""
    TAU_CONSTANT = "tau-constant"
    TAU_EXP = "tau-exp"
    TAU_CHIDNOK = "tau-chidnok"
    HYDRAULIC = "hydraulic"


class Statistic(str, Enum):
    """自助法检验统计量"""
    DELTA_MAE = "delta_mae"
    DELTA_RMSE = "delta_rmse"


class OutputFormat(str, Enum):
    """输出格式"""
    CSV = "csv"
    JSON = "json"


class Phase(IntEnum):
    """恢复协议阶段"""
    FAILED = -1
    WB1 = 0
    RB = 1
    WB2 = 2
    DONE = 3
