"""
命令实现

每个命令只负责组织计算与写出文件；数值计算全部在 core 中完成。
所有文件由主线程写出，输出与工作线程数无关。
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import AppConfig
from core import evolution, fitting, stats
from core.batch_processor import BatchProcessor
from core.errors import InvariantError, PermodError
from core.protocol import build_model, intermittent_tte, predict_dataset, recovery_ratio, \
    recovery_curve, time_to_exhaustion
from core.wbal import TauFunction, WbalModel
from models.athlete import AthleteCapacity, RecoveryTrial, StudyDataset
from models.enums import FitKind, ModelKind, OutputFormat, Role, Statistic
from models.fit_result import FitResult
from models.hydraulic_config import HydraulicConfig
from models.manifest import RunManifest
from utils.datasets import all_builtin, builtin_dataset, dataset_frame
from utils.export_utils import ExportUtils

logger = logging.getLogger(__name__)

# 表 1-5 对应的数据集
TABLE_DATASETS = {1: "bartram", 2: "caen", 3: "chidnok", 4: "ferguson", 5: "weigend"}
ALL_MODELS = (ModelKind.WBAL_SKIB, ModelKind.WBAL_BART, ModelKind.WBAL_WEIG, ModelKind.HYDRAULIC)

# 误差汇总的两组纯预测比较，以及 AICc 比较
PREDICTION_GROUPS = {
    "bart_vs_hydraulic": (ModelKind.WBAL_BART, ModelKind.HYDRAULIC),
    "skib_weig_hydraulic": (ModelKind.WBAL_SKIB, ModelKind.WBAL_WEIG, ModelKind.HYDRAULIC),
}
AICC_GROUP = ("aicc", (ModelKind.WBAL_WEIG, ModelKind.HYDRAULIC))
P_VALUE_DIGITS = 3


@dataclass
class RunContext:
    """一次命令运行的公共设置"""
    out_dir: Path
    dt: float = 0.1
    seed: int = 0
    fmt: OutputFormat = OutputFormat.CSV
    workers: int = 1
    app: AppConfig = field(default_factory=AppConfig)

    def manifest(self, command: str, **parameters) -> RunManifest:
        return RunManifest(command=command, parameters=parameters, seed=self.seed, dt=self.dt)

    def finish(self, manifest: RunManifest) -> Path:
        manifest.finish()
        return ExportUtils.write_manifest(manifest, self.out_dir)


@dataclass(frozen=True)
class Subject:
    """被模拟的对象：运动员参数与可选的液压配置"""
    name: str
    athlete: AthleteCapacity
    config: Optional[HydraulicConfig] = None

    @classmethod
    def from_dataset(cls, dataset: StudyDataset) -> 'Subject':
        return cls(dataset.name, dataset.athlete, dataset.fitted_hydraulic)

    def model(self, kind: ModelKind):
        if kind is ModelKind.HYDRAULIC and self.config is None:
            raise InvariantError("hydraulic model needs a config", f"subject {self.name} has none")
        return build_model(kind, self.athlete, self.config)


def _predict_task(task) -> List[float]:
    dataset, kind, dt, t_max = task
    return predict_dataset(dataset, kind, dt, t_max)


def predict_all(ctx: RunContext, datasets: Sequence[StudyDataset],
                models: Sequence[ModelKind] = ALL_MODELS) -> Dict[Tuple[str, ModelKind], List[float]]:
    """并行计算每个 (数据集, 模型) 的预测列"""
    tasks = [(d, kind, ctx.dt, ctx.app.t_max) for d in datasets for kind in models]
    results = BatchProcessor(max_workers=ctx.workers).map(_predict_task, tasks)
    return {(task[0].name, task[1]): result for task, result in zip(tasks, results)}


# ---------------------------------------------------------------- reproduce

def cmd_reproduce(ctx: RunContext, table: int, source: str = "computed",
                  samples: Optional[int] = None) -> List[Path]:
    """复现表 1-6"""
    if table not in (1, 2, 3, 4, 5, 6):
        raise InvariantError("table in 1..6", f"table={table}")
    manifest = ctx.manifest("reproduce", table=table, source=source,
                            samples=samples if table == 6 else None)
    if table == 6:
        paths = _reproduce_summary(ctx, manifest, source, samples or ctx.app.bootstrap_samples)
    else:
        dataset = builtin_dataset(TABLE_DATASETS[table])
        frame = dataset_frame(dataset)
        if source == "published":
            for kind in ALL_MODELS:
                column = dataset.published_column(kind)
                frame[kind.column] = column if column is not None else np.nan
        else:
            predictions = predict_all(ctx, [dataset])
            for kind in ALL_MODELS:
                frame[kind.column] = predictions[(dataset.name, kind)]
        paths = [ExportUtils.write_table(frame, ctx.out_dir / f"table_{table}", manifest, ctx.fmt)]
    paths.append(ctx.finish(manifest))
    return paths


def _residuals(datasets: Sequence[StudyDataset], models: Sequence[ModelKind], roles: Sequence[Role],
               columns) -> Dict[ModelKind, stats.ErrorVector]:
    """只保留所有模型角色都在 roles 内的数据集"""
    chosen = [d for d in datasets if all(d.role(m) in roles for m in models)]
    return {
        kind: stats.ErrorVector.concat([
            stats.ErrorVector.from_predictions(d.name, columns(d, kind), d.observed) for d in chosen
        ])
        for kind in models
    }


def _reproduce_summary(ctx: RunContext, manifest: RunManifest, source: str, samples: int) -> List[Path]:
    datasets = all_builtin()
    if source == "published":
        def columns(dataset, kind):
            return dataset.published_column(kind)
    elif source == "computed":
        predictions = predict_all(ctx, datasets)

        def columns(dataset, kind):
            if dataset.role(kind) is Role.OBSERVED:
                return dataset.observed
            return predictions[(dataset.name, kind)]
    else:
        raise InvariantError("source in {computed, published}", f"source={source}")

    metric_rows = []
    test_rows = []
    for group, models in PREDICTION_GROUPS.items():
        errors = _residuals(datasets, models, (Role.PREDICTED,), columns)
        for kind in models:
            e = errors[kind]
            metric_rows.append({
                "group": group, "model": kind.column, "n": len(e),
                "mae": stats.mae(e), "rmse": stats.rmse(e), "sd": stats.sd_abs(e), "aicc": np.nan,
            })
        for i, kind_a in enumerate(models):
            for kind_b in models[i + 1:]:
                for statistic in Statistic:
                    p = stats.bootstrap_test(errors[kind_a], errors[kind_b], statistic, samples,
                                             seed=ctx.seed, chunk_size=ctx.app.bootstrap_chunk,
                                             workers=ctx.workers)
                    test_rows.append({
                        "group": group, "model_a": kind_a.column, "model_b": kind_b.column,
                        "statistic": statistic.value, "samples": samples,
                        "p_value": round(p, P_VALUE_DIGITS),
                    })

    group, models = AICC_GROUP
    errors = _residuals(datasets, models, (Role.PREDICTED, Role.FITTED), columns)
    for kind in models:
        e = errors[kind]
        metric_rows.append({
            "group": group, "model": kind.column, "n": len(e),
            "mae": stats.mae(e), "rmse": stats.rmse(e), "sd": stats.sd_abs(e),
            "aicc": stats.aicc(e, kind.parameter_count),
        })

    metrics = pd.DataFrame(metric_rows, columns=["group", "model", "n", "mae", "rmse", "sd", "aicc"])
    tests = pd.DataFrame(test_rows, columns=["group", "model_a", "model_b", "statistic", "samples", "p_value"])
    for row in metric_rows:
        logger.info(f"{row['group']:>22} {row['model']:>10}: n={row['n']} MAE={row['mae']:.2f} "
                    f"RMSE={row['rmse']:.2f} SD={row['sd']:.2f}")
    return [
        ExportUtils.write_table(metrics, ctx.out_dir / "table_6", manifest, ctx.fmt),
        ExportUtils.write_table(tests, ctx.out_dir / "table_6_tests", manifest, ctx.fmt),
    ]


# ---------------------------------------------------------------- curves

def _series(subject: Subject, models: Sequence[ModelKind], tau: Optional[float]) -> List[Tuple[str, Any]]:
    series = [(kind.column, subject.model(kind)) for kind in models]
    if tau is not None:
        series.append((f"tau_{tau:g}", WbalModel(subject.athlete, TauFunction.constant(tau))))
    return series


def cmd_curve(ctx: RunContext, subject: Subject, models: Sequence[ModelKind], p_work: float, p_rec: float,
              grid: Sequence[float], tau: Optional[float] = None) -> List[Path]:
    """恢复曲线：每个模型在 t_rec 网格上的恢复比例"""
    manifest = ctx.manifest("curve", subject=subject.name, models=[m.value for m in models],
                            p_work=p_work, p_rec=p_rec, grid=list(grid), tau=tau)
    rows = []
    plot = {"x": [float(t) for t in grid], "series": {}}
    for label, model in _series(subject, models, tau):
        ratios = recovery_curve(model, p_work, p_rec, grid, ctx.dt, ctx.app.t_max)
        plot["series"][label] = ratios
        rows.extend({"model": label, "t_rec_s": t, "ratio_pct": r} for t, r in zip(grid, ratios))

    frame = pd.DataFrame(rows, columns=["model", "t_rec_s", "ratio_pct"])
    paths = [
        ExportUtils.write_table(frame, ctx.out_dir / "curve", manifest, ctx.fmt),
        ExportUtils.write_json({"plot": plot}, ctx.out_dir / "curve_plot", manifest),
    ]
    paths.append(ctx.finish(manifest))
    return paths


def cmd_sensitivity(ctx: RunContext, subject: Subject, p_works: Sequence[float], p_rec: float,
                    grid: Sequence[float], models: Sequence[ModelKind] = ALL_MODELS) -> List[Path]:
    """同一恢复条件下改变 P_work 的恢复曲线

    某个 P_work 失败时记录到清单的 errors 中，其余继续。
    """
    manifest = ctx.manifest("sensitivity", subject=subject.name, models=[m.value for m in models],
                            p_works=list(p_works), p_rec=p_rec, grid=list(grid))
    rows = []
    for p_work in p_works:
        for kind in models:
            try:
                ratios = recovery_curve(subject.model(kind), p_work, p_rec, grid, ctx.dt, ctx.app.t_max)
            except PermodError as e:
                logger.warning(f"P_work={p_work:g} {kind.value} 失败: {e}")
                manifest.errors.append(f"p_work={p_work:g} {kind.value}: {e}")
                continue
            rows.extend({"model": kind.column, "p_work_w": p_work, "t_rec_s": t, "ratio_pct": r}
                        for t, r in zip(grid, ratios))

    frame = pd.DataFrame(rows, columns=["model", "p_work_w", "t_rec_s", "ratio_pct"])
    paths = [ExportUtils.write_table(frame, ctx.out_dir / "sensitivity", manifest, ctx.fmt)]
    paths.append(ctx.finish(manifest))
    return paths


# ---------------------------------------------------------------- fits

def _write_fits(ctx: RunContext, manifest: RunManifest, kind: FitKind, fits: List[FitResult]) -> List[Path]:
    payload = {"fits": [fit.to_dict() for fit in fits]}
    paths = [ExportUtils.write_json(payload, ctx.out_dir / f"fit_{kind.value}", manifest)]
    paths.append(ctx.finish(manifest))
    return paths


def cmd_fit(ctx: RunContext, kind: FitKind, subject: Subject, trials: Sequence[RecoveryTrial] = (),
            intermittent: Sequence[Tuple[float, float, float]] = (), runs: Optional[int] = None,
            budget: Optional[int] = None, population: Optional[int] = None,
            recovery_targets: Optional[Sequence[RecoveryTrial]] = None, warm_start: bool = False) -> List[Path]:
    """运行一种拟合并写出 FitResult JSON

    Args:
        trials: tau-constant / tau-exp 使用的恢复试验
        intermittent: tau-chidnok 使用的 (p_work, p_rec, 观测力竭时间)
        recovery_targets: hydraulic 拟合的恢复目标，None 时使用默认目标
        warm_start: hydraulic 拟合从 subject 的已有配置出发
    """
    kind = FitKind(kind)
    app = ctx.app
    manifest = ctx.manifest("fit", kind=kind.value, subject=subject.name, athlete=subject.athlete.to_dict())
    fits: List[FitResult] = []

    if kind is FitKind.TAU_CONSTANT:
        if not trials:
            raise InvariantError("tau-constant fit needs at least one trial")
        for trial in trials:
            fits.append(fitting.fit_constant_tau(subject.athlete, trial, ctx.dt,
                                                 initial_guess=app.tau_initial_guess, tau_cap=app.tau_cap))

    elif kind is FitKind.TAU_EXP:
        pairs = fitting.fit_trial_pairs(subject.athlete, trials, ctx.dt)
        fits.append(fitting.fit_exponential_tau(pairs, initial_guess=app.exp_initial_guess))

    elif kind is FitKind.TAU_CHIDNOK:
        if not intermittent:
            raise InvariantError("tau-chidnok fit needs at least one (p_rec, tte) observation")
        for p_work, p_rec, tte in intermittent:
            fits.append(fitting.fit_chidnok_tau(
                subject.athlete, p_work, p_rec, tte, ctx.dt,
                work_dur=app.chidnok_work_dur, rec_dur=app.chidnok_rec_dur,
                bounds=tuple(app.chidnok_bounds), t_max=app.t_max))

    else:
        manifest.parameters.update(runs=runs or app.fit_runs, budget=budget or app.fit_budget,
                                   population=population or app.fit_population, warm_start=warm_start)
        fits.append(evolution.fit_hydraulic(
            subject.athlete, recovery_targets,
            runs=runs or app.fit_runs, seed=ctx.seed, budget=budget or app.fit_budget,
            population=population or app.fit_population, dt=ctx.dt, t_max=app.fit_t_max,
            tte_grid=app.tte_grid, pipe_below_ans=app.enforce_pipe_below_ans, workers=ctx.workers,
            initial=subject.config if warm_start else None))

    for fit in fits:
        if fit.flagged:
            logger.warning(f"{kind.value} 拟合带有标记: {fit.flags}")
    return _write_fits(ctx, manifest, kind, fits)


# ---------------------------------------------------------------- simulate

def cmd_simulate(ctx: RunContext, subject: Subject, kind: ModelKind, protocol: str, p_work: float,
                 p_rec: Optional[float] = None, t_rec: Optional[float] = None, work_dur: Optional[float] = None,
                 rest_dur: Optional[float] = None, tau: Optional[float] = None) -> Dict[str, Any]:
    """单次模拟：恒定功率力竭、恢复比例或间歇力竭"""
    model = WbalModel(subject.athlete, TauFunction.constant(tau)) if tau is not None else subject.model(kind)
    manifest = ctx.manifest("simulate", subject=subject.name, model=model.describe(), protocol=protocol,
                            p_work=p_work, p_rec=p_rec, t_rec=t_rec, work_dur=work_dur, rest_dur=rest_dur)
    t_max = ctx.app.t_max
    result: Dict[str, Any] = {"model": model.describe(), "protocol": protocol}

    if protocol == "constant":
        model.reset()
        result["tte_s"] = time_to_exhaustion(model, p_work, ctx.dt, t_max)
    elif protocol == "recovery":
        if p_rec is None or t_rec is None:
            raise InvariantError("recovery protocol needs p_rec and t_rec")
        result["ratio_pct"] = recovery_ratio(model, p_work, p_rec, t_rec, ctx.dt, t_max)
    elif protocol == "intermittent":
        if p_rec is None:
            raise InvariantError("intermittent protocol needs p_rec")
        work_dur = work_dur if work_dur is not None else ctx.app.chidnok_work_dur
        rest_dur = rest_dur if rest_dur is not None else ctx.app.chidnok_rec_dur
        result["tte_s"] = intermittent_tte(model, p_work, p_rec, work_dur, rest_dur, ctx.dt, t_max)
    else:
        raise InvariantError("protocol in {constant, recovery, intermittent}", f"protocol={protocol}")

    ExportUtils.write_json({"result": result}, ctx.out_dir / "simulate", manifest)
    ctx.finish(manifest)
    return result
