"""
命令行界面
"""

from .parser import UsageError, build_parser, dispatch

__all__ = ["UsageError", "build_parser", "dispatch"]
