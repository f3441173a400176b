"""
命令行参数解析与命令分发
"""

import argparse
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from config import Config
from core.errors import InvariantError
from core.evolution import relative_targets
from models.athlete import AthleteCapacity, RecoveryTrial
from models.enums import FitKind, ModelKind, OutputFormat
from models.hydraulic_config import PARAMETER_NAMES, HydraulicConfig
from utils.datasets import builtin_dataset, builtin_names, load_csv
from .commands import RunContext, Subject, cmd_curve, cmd_fit, cmd_reproduce, cmd_sensitivity, \
    cmd_simulate

logger = logging.getLogger(__name__)

PROG = "permod"
MODEL_CHOICES = [m.value for m in ModelKind]


class UsageError(Exception):
    """命令行用法错误"""


class ArgumentParser(argparse.ArgumentParser):
    """用法错误抛出异常而不是直接退出，由 main 映射退出码"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_subject_args(parser: argparse.ArgumentParser, default_dataset: Optional[str] = None):
    group = parser.add_argument_group("对象")
    group.add_argument("--dataset", default=default_dataset,
                       help=f"内置数据集 ({', '.join(builtin_names())}) 或 CSV 文件路径")
    group.add_argument("--cp", type=float, help="临界功率 (W)，与 --wprime 一起覆盖数据集")
    group.add_argument("--wprime", type=float, help="W' (J)")
    group.add_argument("--hyd-config", type=float, nargs=len(PARAMETER_NAMES), metavar="X",
                       help=f"液压配置 [{', '.join(PARAMETER_NAMES)}]")


def _add_grid_args(parser: argparse.ArgumentParser):
    parser.add_argument("--grid", type=float, nargs="*", help="恢复时长列表 (s)，给出空列表时只写清单")
    parser.add_argument("--step", type=float, help="网格步长 (s)，默认取配置")
    parser.add_argument("--max", dest="grid_max", type=float, help="网格上限 (s)，默认取配置")


def build_parser() -> ArgumentParser:
    """创建命令行解析器"""
    parser = ArgumentParser(prog=PROG, description="能量恢复模型：W'bal 与三罐液压模型的模拟、拟合与比较")
    parser.add_argument("--dt", type=float, help="模拟步长 (s)，默认 0.1")
    parser.add_argument("--seed", type=int, help="随机种子")
    parser.add_argument("--out-dir", help="输出目录")
    parser.add_argument("--format", dest="fmt", choices=[f.value for f in OutputFormat], help="表格输出格式")
    parser.add_argument("--threads", type=int, help="工作线程数上限")
    parser.add_argument("--config", help="配置文件 (.json / .yaml)")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("reproduce", help="复现表 1-6")
    p.add_argument("--table", type=int, required=True, choices=range(1, 7), metavar="{1..6}")
    p.add_argument("--source", choices=["computed", "published"], default="computed",
                   help="预测列来源：本实现计算或已发表的数值")
    p.add_argument("--samples", type=int, help="自助法重抽次数")

    p = sub.add_parser("curve", help="恢复曲线")
    _add_subject_args(p, default_dataset="caen")
    p.add_argument("--model", dest="models", nargs="+", choices=MODEL_CHOICES, default=[ModelKind.HYDRAULIC.value])
    p.add_argument("--tau", type=float, help="额外加入常数 τ 的 W'bal 曲线")
    p.add_argument("--pwork", type=float, help="做功功率 (W)，默认取数据集第一行")
    p.add_argument("--prec", type=float, help="恢复功率 (W)，默认取数据集第一行")
    _add_grid_args(p)

    p = sub.add_parser("sensitivity", help="不同 P_work 下的恢复曲线")
    _add_subject_args(p, default_dataset="bartram")
    p.add_argument("--model", dest="models", nargs="+", choices=MODEL_CHOICES, default=MODEL_CHOICES)
    work = p.add_mutually_exclusive_group()
    work.add_argument("--p-works", type=float, nargs="+", help="做功功率列表 (W)")
    work.add_argument("--p-times", type=float, nargs="+", default=[100.0, 240.0, 360.0, 480.0],
                      help="按 CP 模型力竭时间给出做功功率 (s)")
    rec = p.add_mutually_exclusive_group()
    rec.add_argument("--prec", type=float, help="恢复功率 (W)")
    rec.add_argument("--d-cp", type=float, default=200.0, help="恢复功率取 CP - d_cp (W)")
    _add_grid_args(p)

    p = sub.add_parser("fit", help="拟合 τ 或液压配置")
    p.add_argument("kind", choices=[k.value for k in FitKind])
    _add_subject_args(p)
    p.add_argument("--pwork", type=float, help="做功功率 (W)")
    p.add_argument("--prec", type=float, help="恢复功率 (W)")
    p.add_argument("--trec", type=float, help="恢复时长 (s)，tau-constant")
    p.add_argument("--ratio", type=float, help="观测恢复比例 (%%)，tau-constant")
    p.add_argument("--tte", type=float, help="观测间歇力竭时间 (s)，tau-chidnok")
    p.add_argument("--runs", type=int, help="进化策略独立运行次数")
    p.add_argument("--budget", type=int, help="每次运行的目标函数评估次数")
    p.add_argument("--population", type=int, help="每代后代数")
    p.add_argument("--own-targets", action="store_true", help="液压拟合以数据集自身的试验为恢复目标")
    p.add_argument("--warm-start", action="store_true", help="液压拟合把已有配置放入初始种群")

    p = sub.add_parser("simulate", help="单次模拟")
    _add_subject_args(p, default_dataset="caen")
    p.add_argument("--model", choices=MODEL_CHOICES, default=ModelKind.HYDRAULIC.value)
    p.add_argument("--tau", type=float, help="使用常数 τ 的 W'bal 模型")
    p.add_argument("--protocol", choices=["constant", "recovery", "intermittent"], default="constant")
    p.add_argument("--power", "--pwork", dest="pwork", type=float, required=True, help="做功功率 (W)")
    p.add_argument("--prec", type=float, help="恢复功率 (W)")
    p.add_argument("--trec", type=float, help="恢复时长 (s)")
    p.add_argument("--work", type=float, help="间歇做功时长 (s)")
    p.add_argument("--rest", type=float, help="间歇休息时长 (s)")

    return parser


def _dataset(args):
    if not args.dataset:
        return None
    if args.dataset.lower() in builtin_names():
        return builtin_dataset(args.dataset)
    if Path(args.dataset).suffix.lower() == ".csv":
        return load_csv(args.dataset)
    # 触发 UnknownDatasetError
    return builtin_dataset(args.dataset)


def _subject(args, dataset) -> Subject:
    config = HydraulicConfig.from_list(args.hyd_config) if args.hyd_config else None
    if args.cp is not None or args.wprime is not None:
        if args.cp is None or args.wprime is None:
            raise UsageError("--cp 与 --wprime 需要同时给出")
        athlete = AthleteCapacity(args.cp, args.wprime)
        return Subject("custom", athlete, config)
    if dataset is None:
        raise UsageError("需要 --dataset 或 --cp/--wprime")
    return Subject(dataset.name, dataset.athlete, config or dataset.fitted_hydraulic)


def _grid(args, ctx: RunContext) -> List[float]:
    if args.grid is not None:
        return list(args.grid)
    step = args.step if args.step is not None else ctx.app.curve_step
    grid_max = args.grid_max if args.grid_max is not None else ctx.app.curve_max
    if step <= 0:
        raise UsageError("--step 必须大于 0")
    return [float(t) for t in np.round(np.arange(0.0, grid_max + step / 2, step), 6)]


def _run_reproduce(args, ctx):
    return cmd_reproduce(ctx, args.table, args.source, args.samples)


def _run_curve(args, ctx):
    dataset = _dataset(args)
    subject = _subject(args, dataset)
    first = dataset.trials[0] if dataset is not None else None
    p_work = args.pwork if args.pwork is not None else getattr(first, "p_work", None)
    p_rec = args.prec if args.prec is not None else getattr(first, "p_rec", None)
    if p_work is None or p_rec is None:
        raise UsageError("需要 --pwork 与 --prec")
    models = [ModelKind(m) for m in args.models]
    return cmd_curve(ctx, subject, models, p_work, p_rec, _grid(args, ctx), args.tau)


def _run_sensitivity(args, ctx):
    subject = _subject(args, _dataset(args))
    if args.p_works:
        p_works = list(args.p_works)
    else:
        p_works = [subject.athlete.power_for_tte(t) for t in args.p_times]
    p_rec = args.prec if args.prec is not None else subject.athlete.cp - args.d_cp
    models = [ModelKind(m) for m in args.models]
    return cmd_sensitivity(ctx, subject, p_works, p_rec, _grid(args, ctx), models)


def _run_fit(args, ctx):
    kind = FitKind(args.kind)
    defaults = {FitKind.TAU_CONSTANT: None, FitKind.TAU_EXP: "weigend",
                FitKind.TAU_CHIDNOK: "chidnok", FitKind.HYDRAULIC: None}
    if args.dataset is None and args.cp is None:
        args.dataset = defaults[kind]
    dataset = _dataset(args)
    subject = _subject(args, dataset)

    trials: List[RecoveryTrial] = []
    intermittent = []
    targets = None
    if kind is FitKind.TAU_CONSTANT:
        explicit = (args.pwork, args.prec, args.trec, args.ratio)
        if all(v is not None for v in explicit):
            trials = [RecoveryTrial(*explicit)]
        elif dataset is not None:
            trials = [t for t in dataset.trials if t.p_rec < subject.athlete.cp]
        else:
            raise UsageError("tau-constant 需要 --pwork --prec --trec --ratio 或 --dataset")
    elif kind is FitKind.TAU_EXP:
        if dataset is None:
            raise UsageError("tau-exp 需要 --dataset")
        trials = list(dataset.trials)
    elif kind is FitKind.TAU_CHIDNOK:
        p_work = args.pwork
        if p_work is None and dataset is not None:
            p_work = dataset.trials[0].p_work
        if p_work is None:
            raise UsageError("tau-chidnok 需要 --pwork")
        if args.prec is not None or args.tte is not None:
            if args.prec is None or args.tte is None:
                raise UsageError("--prec 与 --tte 需要同时给出")
            intermittent = [(p_work, args.prec, args.tte)]
        elif dataset is not None:
            intermittent = [(p_work, o.p_rec, o.tte) for o in dataset.intermittent if not o.excluded]
    else:
        if args.own_targets:
            if dataset is None:
                raise UsageError("--own-targets 需要 --dataset")
            targets = relative_targets(subject.athlete, dataset.trials, dataset.athlete)
        if args.warm_start and subject.config is None:
            raise UsageError("--warm-start 需要 --dataset 或 --hyd-config")

    return cmd_fit(ctx, kind, subject, trials=trials, intermittent=intermittent, runs=args.runs,
                   budget=args.budget, population=args.population, recovery_targets=targets,
                   warm_start=args.warm_start)


def _run_simulate(args, ctx):
    result = cmd_simulate(ctx, _subject(args, _dataset(args)), ModelKind(args.model), args.protocol, args.pwork,
                          p_rec=args.prec, t_rec=args.trec, work_dur=args.work, rest_dur=args.rest,
                          tau=args.tau)
    print(", ".join(f"{k}={v:.2f}" if isinstance(v, float) else f"{k}={v}" for k, v in result.items()))
    return result


HANDLERS: Dict[str, Callable] = {
    "reproduce": _run_reproduce,
    "curve": _run_curve,
    "sensitivity": _run_sensitivity,
    "fit": _run_fit,
    "simulate": _run_simulate,
}


def make_context(args, config: Config) -> RunContext:
    """用命令行参数覆盖配置"""
    app = config.app_config
    overrides = {"dt": args.dt, "seed": args.seed, "output_dir": args.out_dir,
                 "output_format": args.fmt, "threads": args.threads}
    app.update_from_dict({k: v for k, v in overrides.items() if v is not None})
    valid, message = app.validate()
    if not valid:
        raise InvariantError("valid configuration", message)
    return RunContext(
        out_dir=config.get_output_dir(),
        dt=app.dt,
        seed=app.seed,
        fmt=OutputFormat(app.output_format),
        workers=config.worker_count(),
        app=app,
    )


def dispatch(args, config: Config):
    """执行子命令"""
    ctx = make_context(args, config)
    config.ensure_dirs()
    logger.info(f"运行 {args.command}，输出目录 {ctx.out_dir}")
    return HANDLERS[args.command](args, ctx)
