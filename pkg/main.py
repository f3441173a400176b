#!/usr/bin/env python3
"""
能量恢复模型工具 - 命令行入口

退出码: 0 成功, 1 用法错误, 2 模型/数据错误, 3 IO 错误
"""

import sys
import logging
from pathlib import Path

# 添加项目根目录到路径
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

from cli import UsageError, build_parser, dispatch
from config import Config
from core.errors import PermodError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_IO = 3


def setup_logging(level: str, log_file: str):
    """设置日志：文件与控制台"""
    handlers = [logging.StreamHandler()]
    try:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.insert(0, logging.FileHandler(log_file, encoding='utf-8'))
    except OSError as e:
        print(f"无法写入日志文件 {log_file}: {e}", file=sys.stderr)

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def main(argv=None) -> int:
    """主函数"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    config = Config(args.config) if args.config else Config()
    app = config.app_config
    log_file = Path(app.log_file)
    if not log_file.is_absolute():
        log_file = Path(args.out_dir or app.output_dir) / log_file
    setup_logging(args.log_level or app.log_level, str(log_file))

    try:
        dispatch(args, config)
        return EXIT_OK
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except PermodError as e:
        logger.error(f"{args.command} 失败: {e}")
        return EXIT_MODEL
    except OSError as e:
        logger.error(f"读写文件失败: {e}")
        return EXIT_IO
    except Exception as e:
        logger.error(f"{args.command} 意外失败: {e}", exc_info=True)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
