"""
运行清单：记录每个输出文件的来源
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

from version import __version__


@dataclass
class RunManifest:
    """命令、参数、种子、步长、版本与时间戳"""
    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    dt: float = 0.1
    version: str = __version__
    started_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))
    finished_at: Optional[str] = None
    errors: List[str] = field(default_factory=list)

    def finish(self):
        """记录结束时间"""
        self.finished_at = datetime.now().isoformat(timespec="seconds")

    def deterministic_dict(self) -> Dict[str, Any]:
        """不含时间戳的部分，嵌入 CSV 后输出可逐字节复现"""
        return {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "dt": self.dt,
            "version": self.version,
        }

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        data = self.deterministic_dict()
        data.update({
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "errors": list(self.errors),
        })
        return data
