"""
数据模型模块
"""

from .athlete import AthleteCapacity, IntermittentObservation, RecoveryTrial, StudyDataset
from .enums import FitKind, ModelKind, OutputFormat, Phase, Role, Statistic, TauKind
from .fit_result import FitResult
from .hydraulic_config import PARAMETER_NAMES, HydraulicConfig, HydraulicState
from .manifest import RunManifest

__all__ = [
    'AthleteCapacity', 'IntermittentObservation', 'RecoveryTrial', 'StudyDataset',
    'FitKind', 'ModelKind', 'OutputFormat', 'Phase', 'Role', 'Statistic', 'TauKind',
    'FitResult', 'PARAMETER_NAMES', 'HydraulicConfig', 'HydraulicState', 'RunManifest',
]
