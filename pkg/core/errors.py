"""
异常定义

所有库内异常都继承自 PermodError，命令行入口据此映射退出码。
"""

from typing import Any, Dict, Optional


class PermodError(Exception):
    """库内异常基类"""


class DataError(PermodError, ValueError):
    """数据或参数不合法"""


class InvariantError(DataError):
    """违反数据约束，rule 为失败的规则描述"""

    def __init__(self, rule: str, detail: str = ""):
        self.rule = rule
        self.detail = detail
        message = f"约束不满足: {rule}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ParseError(DataError):
    """CSV 解析错误，带行列位置（行号从 1 开始，含表头）"""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"第 {row} 行")
        if column is not None:
            location.append(f"列 '{column}'")
        prefix = ", ".join(location)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class UnknownDatasetError(DataError, KeyError):
    """未知的内置数据集名称"""

    def __init__(self, name: str, known):
        self.name = name
        super().__init__(f"未知数据集 '{name}'，可选: {', '.join(known)}")

    def __str__(self) -> str:
        return self.args[0]


class TauDomainError(PermodError, ValueError):
    """τ 函数在给定 D_CP 处无定义"""


class SustainableIntensityError(PermodError):
    """给定强度在时间上限内不会力竭"""

    def __init__(self, power: float, t_max: float):
        self.power = power
        self.t_max = t_max
        super().__init__(f"功率 {power:.2f} W 在 {t_max:.1f} s 内未力竭")


class FitError(PermodError, RuntimeError):
    """拟合失败，best 为最优迭代值"""

    def __init__(self, message: str, best: Any = None, diagnostics: Optional[Dict[str, Any]] = None):
        self.best = best
        self.diagnostics = diagnostics or {}
        super().__init__(message)
