"""Utility modules"""

from .console import (
    console,
    format_cell,
    print_dim,
    print_error,
    print_info,
    print_rows,
    print_success,
    print_warning,
)
from .debuglog import log_event

__all__ = [
    "console",
    "format_cell",
    "print_dim",
    "print_error",
    "print_info",
    "print_rows",
    "print_success",
    "print_warning",
    "log_event",
]
