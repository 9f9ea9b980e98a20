"""Console utilities for rich output"""

from __future__ import annotations

from typing import Any, Optional, Sequence

from rich.console import Console
from rich.table import Table
from rich.theme import Theme

# Custom theme
THEME = Theme(
    {
        "info": "cyan",
        "warning": "yellow",
        "error": "red bold",
        "success": "green",
        "dim": "dim",
        "cpu": "blue bold",
        "gpu": "magenta bold",
    }
)

# Global console instance
console = Console(theme=THEME)


def print_info(message: str) -> None:
    """Print info message"""
    console.print(f"[info]{message}[/info]")


def print_warning(message: str) -> None:
    """Print warning message"""
    console.print(f"[warning]Warning: {message}[/warning]")


def print_error(message: str) -> None:
    """Print error message"""
    console.print(f"[error]Error: {message}[/error]")


def print_success(message: str) -> None:
    """Print success message"""
    console.print(f"[success]{message}[/success]")


def print_dim(message: str) -> None:
    """Print dimmed message"""
    console.print(f"[dim]{message}[/dim]")


def print_rows(
    title: str,
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    highlight: Optional[int] = None,
    caption: Optional[str] = None,
) -> None:
    """Print rows as a rich table.

    Args:
        title: Table title
        header: Column names
        rows: Row values, formatted with ``format_cell``
        highlight: Index of a row to render in bold green
        caption: Optional caption under the table
    """
    table = Table(title=title, caption=caption)
    for i, name in enumerate(header):
        table.add_column(name, style="cyan" if i == 0 else None)
    for index, row in enumerate(rows):
        style = "bold green" if index == highlight else None
        table.add_row(*(format_cell(v) for v in row), style=style)
    console.print(table)


def format_cell(value: Any) -> str:
    """Format a value for table output"""
    if isinstance(value, float):
        if value == 0.0:
            return "0"
        if abs(value) < 1e-3 or abs(value) >= 1e6:
            return f"{value:.4e}"
        return f"{value:.6g}"
    return str(value)
