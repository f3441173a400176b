"""
配置管理模块
"""

import os
import json
import shutil
import logging
from pathlib import Path
from typing import Dict, Any, List, Tuple
from dataclasses import dataclass, field, asdict

import yaml

from core.batch_processor import resolve_workers

logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")


@dataclass
class AppConfig:
    """应用配置"""
    # 模拟配置
    dt: float = 0.1
    t_max: float = 7200.0  # 秒
    seed: int = 0
    threads: int = 0  # 0 表示自动

    # 输出配置
    output_dir: str = "results"
    output_format: str = "csv"

    # 恢复曲线
    curve_step: float = 10.0
    curve_max: float = 900.0

    # τ 拟合配置
    tau_initial_guess: float = 200.0
    tau_cap: float = 1e6
    exp_initial_guess: List[float] = field(default_factory=lambda: [546.0, -0.01, 316.0])
    chidnok_bounds: List[float] = field(default_factory=lambda: [100.0, 1000.0])
    chidnok_work_dur: float = 60.0
    chidnok_rec_dur: float = 30.0

    # 液压模型拟合配置
    fit_runs: int = 10
    fit_budget: int = 10000
    fit_population: int = 32
    fit_t_max: float = 1440.0
    tte_grid: List[float] = field(default_factory=lambda: [100.0, 240.0, 480.0, 720.0])
    enforce_pipe_below_ans: bool = False

    # 统计检验配置
    bootstrap_samples: int = 1_000_000
    bootstrap_chunk: int = 50_000

    # 日志配置
    log_level: str = "INFO"
    log_file: str = "permod.log"

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return asdict(self)

    def update_from_dict(self, data: Dict[str, Any]):
        """从字典更新配置，未知键被忽略"""
        for key, value in data.items():
            if hasattr(self, key):
                setattr(self, key, value)
            else:
                logger.warning(f"忽略未知配置项: {key}")

    def validate(self) -> Tuple[bool, str]:
        """验证配置"""
        errors = []

        if not self.dt > 0:
            errors.append("dt 必须大于 0")
        if not self.t_max > 0:
            errors.append("t_max 必须大于 0")
        if self.threads < 0:
            errors.append("threads 不能为负")
        if not self.output_dir:
            errors.append("输出目录不能为空")
        if self.output_format not in ("csv", "json"):
            errors.append("输出格式应为 csv 或 json")
        if not (self.curve_step > 0 and self.curve_max >= 0):
            errors.append("恢复曲线网格无效")
        if not self.tau_cap > self.tau_initial_guess > 0:
            errors.append("τ 初值应在 (0, tau_cap) 之间")
        if len(self.exp_initial_guess) != 3:
            errors.append("指数拟合初值需要 3 个数")
        if len(self.chidnok_bounds) != 2 or not 0 < self.chidnok_bounds[0] < self.chidnok_bounds[1]:
            errors.append("chidnok_bounds 应为 [下界, 上界]")
        if self.fit_runs < 1:
            errors.append("fit_runs 至少为 1")
        if self.fit_population < 32:
            errors.append("fit_population 至少为 32")
        if self.fit_budget < self.fit_population:
            errors.append("fit_budget 不能小于种群大小")
        if not self.tte_grid or min(self.tte_grid) <= 0:
            errors.append("tte_grid 需要正的时长")
        if self.bootstrap_samples < 1 or self.bootstrap_chunk < 1:
            errors.append("自助法次数与分块大小至少为 1")

        if errors:
            return False, "; ".join(errors)
        return True, ""


class Config:
    """配置管理器"""

    def __init__(self, config_file: str = None):
        """
        初始化配置管理器

        Args:
            config_file: 配置文件路径 (.json / .yaml / .yml)，如果为None则使用默认路径
        """
        self.config_file = config_file or "config.json"
        self.app_config = AppConfig()
        self._loaded = False

        self.load_config()

    @property
    def is_yaml(self) -> bool:
        return Path(self.config_file).suffix.lower() in YAML_SUFFIXES

    def load_config(self) -> bool:
        """加载配置文件"""
        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    data = yaml.safe_load(f) if self.is_yaml else json.load(f)
                if not isinstance(data, dict):
                    raise ValueError("顶层必须是映射")

                candidate = AppConfig()
                candidate.update_from_dict(data)

                # 验证配置
                valid, message = candidate.validate()
                if not valid:
                    logger.warning(f"配置验证失败: {message}")
                    # 保持默认配置
                    return False

                self.app_config = candidate
                self._loaded = True
                logger.info(f"配置已从 {self.config_file} 加载")
                return True

            except json.JSONDecodeError as e:
                logger.error(f"配置文件格式错误: {e}")
            except yaml.YAMLError as e:
                logger.error(f"配置文件格式错误: {e}")
            except Exception as e:
                logger.error(f"加载配置文件失败: {e}")

        logger.info("使用默认配置")
        return False

    def save_config(self) -> bool:
        """保存配置文件"""
        try:
            # 验证配置
            valid, message = self.app_config.validate()
            if not valid:
                logger.error(f"配置验证失败: {message}")
                return False

            config_dir = os.path.dirname(self.config_file)
            if config_dir:
                os.makedirs(config_dir, exist_ok=True)

            # 创建备份
            if os.path.exists(self.config_file):
                backup_file = f"{self.config_file}.backup"
                try:
                    shutil.copy2(self.config_file, backup_file)
                except Exception as e:
                    logger.warning(f"创建配置备份失败: {e}")

            with open(self.config_file, 'w', encoding='utf-8') as f:
                if self.is_yaml:
                    yaml.safe_dump(self.app_config.to_dict(), f, allow_unicode=True, sort_keys=False)
                else:
                    json.dump(self.app_config.to_dict(), f, indent=2, ensure_ascii=False)

            logger.info(f"配置已保存到 {self.config_file}")
            return True

        except Exception as e:
            logger.error(f"保存配置文件失败: {e}")
            return False

    def worker_count(self) -> int:
        """工作线程数，受环境变量 PERMOD_THREADS 限制"""
        return resolve_workers(self.app_config.threads or None)

    def get_output_dir(self) -> Path:
        """获取输出目录"""
        return Path(self.app_config.output_dir).expanduser().resolve()

    def ensure_dirs(self):
        """确保输出目录存在"""
        self.get_output_dir().mkdir(parents=True, exist_ok=True)

    def __getitem__(self, key: str) -> Any:
        return getattr(self.app_config, key)
