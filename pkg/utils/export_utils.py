"""
导出工具模块
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd

from models.enums import OutputFormat
from models.manifest import RunManifest

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.4f"
MANIFEST_PREFIX = "# manifest: "


class ExportUtils:
    """导出工具类"""

    @staticmethod
    def write_table(frame: pd.DataFrame, path: Union[str, Path], manifest: RunManifest,
                    fmt: OutputFormat = OutputFormat.CSV) -> Path:
        """
        写出表格

        CSV 在表头前以注释行嵌入清单（不含时间戳）；JSON 写为 {"manifest", "rows"}。

        Args:
            frame: 表格数据
            path: 不含扩展名也可，按格式补全
            manifest: 运行清单
            fmt: 输出格式

        Returns:
            写出的文件路径
        """
        fmt = OutputFormat(fmt)
        path = Path(path).with_suffix(f".{fmt.value}")
        path.parent.mkdir(parents=True, exist_ok=True)

        if fmt is OutputFormat.CSV:
            header = MANIFEST_PREFIX + json.dumps(manifest.deterministic_dict(), sort_keys=True) + "\n"
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(header)
                frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        else:
            payload = {
                "manifest": manifest.deterministic_dict(),
                "rows": json.loads(frame.to_json(orient="records", double_precision=6)),
            }
            ExportUtils._dump_json(payload, path)

        logger.info(f"已写出 {path}")
        return path

    @staticmethod
    def write_json(data: Dict[str, Any], path: Union[str, Path], manifest: RunManifest) -> Path:
        """写出带清单的 JSON 报告"""
        path = Path(path).with_suffix(".json")
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"manifest": manifest.to_dict(), **data}
        ExportUtils._dump_json(payload, path)
        logger.info(f"已写出 {path}")
        return path

    @staticmethod
    def write_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
        """写出完整的运行清单（含时间戳）"""
        path = Path(out_dir) / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        ExportUtils._dump_json(manifest.to_dict(), path)
        return path

    @staticmethod
    def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
        """读取 CSV 中嵌入的清单"""
        with open(path, "r", encoding="utf-8") as f:
            first = f.readline()
        if not first.startswith(MANIFEST_PREFIX):
            return {}
        return json.loads(first[len(MANIFEST_PREFIX):])

    @staticmethod
    def _dump_json(payload: Dict[str, Any], path: Path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, ensure_ascii=False, sort_keys=False, default=_json_default)
            f.write("\n")


def _json_default(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"无法序列化 {type(value).__name__}")
