"""
内置研究数据集与 CSV 读写

五项研究的组均值数据：运动员 CP 与 W'、试验行与观测恢复比例、
已发表的液压模型配置，以及各模型已发表的预测列（用于误差汇总）。
"""

import logging
from pathlib import Path
from typing import Dict, List, Union

import pandas as pd

from core.errors import InvariantError, ParseError, UnknownDatasetError
from models.athlete import AthleteCapacity, IntermittentObservation, RecoveryTrial, StudyDataset
from models.enums import ModelKind, Role
from models.hydraulic_config import HydraulicConfig

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["dataset", "cp_w", "w_prime_j", "p_work_w", "p_rec_w", "t_rec_s", "observed_ratio_pct"]

# 每行 (p_work, p_rec, t_rec, observed)
_BUILTIN: Dict[str, dict] = {
    "bartram": {
        "cp": 393.0, "w_prime": 23300.0,
        "rows": [
            (626.0, 393.0, 60.0, 0.0),
            (626.0, 343.0, 60.0, 33.0),
            (626.0, 293.0, 60.0, 47.0),
            (626.0, 243.0, 60.0, 57.0),
            (626.0, 193.0, 60.0, 64.0),
        ],
        "published": {
            "skib": (0.0, 12.1, 22.8, 32.1, 40.3),
            "weig": (0.0, 10.6, 16.9, 19.4, 20.0),
            "hydraulic": (22.7, 33.9, 44.8, 52.7, 59.3),
        },
        "config": [23111.91, 65845.28, 391.57, 148.88, 24.15, 0.73, 0.01, 0.24],
        "roles": {ModelKind.WBAL_BART.value: Role.OBSERVED},
    },
    "caen": {
        "cp": 269.0, "w_prime": 19200.0,
        "rows": [
            (349.0, 161.0, 30.0, 28.6),
            (349.0, 161.0, 60.0, 34.8),
            (349.0, 161.0, 120.0, 44.2),
            (349.0, 161.0, 180.0, 50.5),
            (349.0, 161.0, 240.0, 55.1),
            (349.0, 161.0, 300.0, 56.8),
            (349.0, 161.0, 600.0, 73.7),
            (349.0, 161.0, 900.0, 71.3),
        ],
        "sd": (8.2, 11.1, 9.7, 12.1, 13.3, 16.4, 19.3, 20.8),
        "published": {
            "bart": (28.0, 48.2, 73.2, 86.1, 92.8, 96.3, 99.9, 100.0),
            "skib": (15.5, 28.7, 49.1, 63.7, 74.1, 81.5, 96.6, 99.4),
            "weig": (9.2, 17.5, 31.9, 43.8, 53.6, 61.8, 85.4, 94.4),
            "hydraulic": (26.9, 41.2, 49.8, 52.8, 54.7, 56.3, 64.9, 73.8),
        },
        "config": [17631.06, 46246.13, 267.28, 117.50, 20.09, 0.68, 0.01, 0.29],
    },
    "chidnok": {
        "cp": 241.0, "w_prime": 21100.0,
        "rows": [
            (329.0, 20.0, 30.0, 16.6),
            (329.0, 95.0, 30.0, 21.4),
            (329.0, 173.0, 30.0, 24.4),
        ],
        "published": {
            "bart": (41.6, 33.3, 21.3),
            "skib": (27.0, 18.8, 9.2),
            "weig": (10.6, 10.1, 6.8),
            "hydraulic": (40.6, 30.9, 20.5),
        },
        "config": [18919.76, 48051.77, 239.55, 115.05, 19.48, 0.68, 0.05, 0.31],
        "intermittent": [
            IntermittentObservation("low", 20.0, 1224.0, 497.0),
            IntermittentObservation("medium", 95.0, 759.0, 243.0),
            IntermittentObservation("high", 173.0, 557.0, 90.0),
            # 高于 CP，不应有恢复
            IntermittentObservation("severe", 270.0, 329.0, 29.0, excluded=True),
        ],
    },
    "ferguson": {
        "cp": 212.0, "w_prime": 21600.0,
        "rows": [
            (269.0, 20.0, 120.0, 37.0),
            (269.0, 20.0, 360.0, 65.0),
            (269.0, 20.0, 900.0, 86.0),
        ],
        "sd": (5.0, 6.0, 4.0),
        "published": {
            "bart": (85.8, 99.7, 100.0),
            "skib": (65.6, 95.9, 100.0),
            "weig": (35.9, 73.6, 96.4),
            "hydraulic": (54.2, 69.4, 98.4),
        },
        "config": [18730.05, 81030.54, 211.56, 94.31, 18.76, 0.63, 0.21, 0.34],
    },
    "weigend": {
        "cp": 248.0, "w_prime": 18200.0,
        "rows": [
            (323.0, 81.0, 120.0, 55.0),
            (323.0, 81.0, 240.0, 61.0),
            (323.0, 81.0, 360.0, 70.5),
            (323.0, 163.0, 120.0, 49.0),
            (323.0, 163.0, 240.0, 55.0),
            (323.0, 163.0, 360.0, 58.0),
            (285.0, 81.0, 120.0, 42.0),
            (285.0, 81.0, 240.0, 52.0),
            (285.0, 81.0, 360.0, 59.5),
            (285.0, 163.0, 120.0, 38.0),
            (285.0, 163.0, 240.0, 37.5),
            (285.0, 163.0, 360.0, 50.0),
        ],
        "published": {
            "bart": (83.1, 97.1, 99.5, 67.2, 89.2, 96.5, 83.0, 97.1, 99.5, 67.2, 89.3, 96.5),
            "skib": (66.7, 89.0, 96.3, 42.9, 67.4, 81.4, 66.8, 89.0, 96.3, 42.9, 67.4, 81.4),
            "weig": (35.5, 58.3, 73.1, 28.4, 48.7, 63.3, 35.5, 58.3, 73.1, 28.4, 48.7, 63.3),
            "hydraulic": (58.3, 65.0, 70.1, 46.5, 51.5, 54.2, 46.8, 54.0, 60.4, 38.5, 43.6, 47.4),
        },
        "config": [18042.06, 46718.18, 247.4, 106.77, 16.96, 0.72, 0.02, 0.25],
        "roles": {ModelKind.WBAL_WEIG.value: Role.FITTED, ModelKind.HYDRAULIC.value: Role.FITTED},
    },
}


def builtin_names() -> List[str]:
    """内置数据集名称，按发表顺序"""
    return list(_BUILTIN)


def builtin_dataset(name: str) -> StudyDataset:
    """按名称返回内置数据集"""
    key = str(name).strip().lower()
    if key not in _BUILTIN:
        raise UnknownDatasetError(name, builtin_names())
    entry = _BUILTIN[key]
    return StudyDataset(
        name=key,
        athlete=AthleteCapacity(entry["cp"], entry["w_prime"]),
        trials=tuple(RecoveryTrial(*row) for row in entry["rows"]),
        fitted_hydraulic=HydraulicConfig.from_list(entry["config"]),
        role_flags=dict(entry.get("roles", {})),
        published=dict(entry["published"]),
        observed_sd=entry.get("sd"),
        intermittent=tuple(entry.get("intermittent", ())),
    )


def all_builtin() -> List[StudyDataset]:
    return [builtin_dataset(name) for name in builtin_names()]


def dataset_frame(dataset: StudyDataset) -> pd.DataFrame:
    """数据集的 CSV 表格形式"""
    return pd.DataFrame(
        [[dataset.name, dataset.athlete.cp, dataset.athlete.w_prime,
          t.p_work, t.p_rec, t.t_rec, t.observed_ratio] for t in dataset.trials],
        columns=CSV_COLUMNS,
    )


def dump_csv(dataset: StudyDataset, path: Union[str, Path]) -> Path:
    """按 CSV 约定写出数据集"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(dataset).to_csv(path, index=False, encoding="utf-8")
    return path


def _parse_float(value: str, row: int, column: str) -> float:
    try:
        return float(str(value).strip())
    except ValueError:
        raise ParseError(f"无法解析数值 {value!r}", row=row, column=column) from None


def load_csv(path: Union[str, Path]) -> StudyDataset:
    """读取 CSV 数据集

    以 # 开头的行视为注释，多余的列被忽略，因此复现表格也可重新读入。
    行号从表头 (第 1 行) 起算，不计注释行。
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise ParseError("文件为空，缺少表头", row=1) from None
    except pd.errors.ParserError as e:
        raise ParseError(f"CSV 格式错误: {e}") from e

    frame.columns = [str(c).strip() for c in frame.columns]
    for column in CSV_COLUMNS:
        if column not in frame.columns:
            raise ParseError("缺少必需的列", row=1, column=column)
    if frame.empty:
        raise InvariantError("trials non-empty", str(path))

    names = set()
    athletes = set()
    trials = []
    for index, record in enumerate(frame.to_dict("records")):
        row = index + 2
        name = str(record["dataset"]).strip()
        if not name:
            raise ParseError("数据集名称为空", row=row, column="dataset")
        names.add(name)
        athletes.add((_parse_float(record["cp_w"], row, "cp_w"),
                      _parse_float(record["w_prime_j"], row, "w_prime_j")))
        values = [_parse_float(record[c], row, c) for c in CSV_COLUMNS[3:]]
        trials.append(RecoveryTrial(*values))

    if len(names) != 1:
        raise InvariantError("one dataset per file", f"names={sorted(names)}")
    if len(athletes) != 1:
        raise InvariantError("all trials share the dataset's athlete parameters", f"{sorted(athletes)}")
    cp, w_prime = athletes.pop()
    dataset = StudyDataset(name=names.pop(), athlete=AthleteCapacity(cp, w_prime), trials=tuple(trials))
    logger.info(f"已从 {path} 读取数据集 {dataset.name}: {len(trials)} 行")
    return dataset
