#!/usr/bin/env python3
"""
能量恢复模型演示脚本
展示如何使用模拟、协议与拟合的核心功能
"""

import sys
from pathlib import Path

# 添加项目根目录到路径
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))


def demo_config():
    """演示配置功能"""
    from config import Config

    print("=== 配置演示 ===")
    config = Config()
    print(f"模拟步长: {config.app_config.dt} s")
    print(f"输出目录: {config.app_config.output_dir}")
    print(f"工作线程数: {config.worker_count()}")
    print()


def demo_recovery():
    """演示恢复比例"""
    from core.protocol import build_model, recovery_ratio
    from models.enums import ModelKind
    from utils.datasets import builtin_dataset

    print("=== 恢复比例演示 (Caen, P_rec = 161 W, T_rec = 120 s) ===")
    caen = builtin_dataset("caen")
    for kind in ModelKind:
        model = build_model(kind, caen.athlete, caen.fitted_hydraulic)
        ratio = recovery_ratio(model, 349.0, 161.0, 120.0)
        print(f"{kind.value:>10}: {ratio:5.1f} %")
    print()


def demo_fitting():
    """演示 τ 拟合"""
    from core.fitting import fit_chidnok_tau
    from utils.datasets import builtin_dataset

    print("=== 间歇协议 τ 拟合演示 (Chidnok) ===")
    chidnok = builtin_dataset("chidnok")
    for obs in chidnok.intermittent:
        if obs.excluded:
            print(f"{obs.label:>7}: 恢复功率高于 CP，跳过")
            continue
        fit = fit_chidnok_tau(chidnok.athlete, 329.0, obs.p_rec, obs.tte)
        print(f"{obs.label:>7}: τ = {fit.parameters['tau']:.2f} s")
    print()


def main():
    """主演示函数"""
    print("能量恢复模型演示")
    print("=" * 50)

    try:
        demo_config()
        demo_recovery()
        demo_fitting()

        print("演示完成！")
        print("\n复现表格:")
        print("python main.py reproduce --table 2")

    except Exception as e:
        print(f"演示出错: {e}")
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
