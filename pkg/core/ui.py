"""
core/ui.py — ringtherm terminal output

Rich rendering for command results: tables for grids and bands, panels for
reports, one-line status messages. With --json every command writes a
single JSON document to stdout instead.
"""

import json
import sys
from typing import Any, Dict, Iterable, Optional, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.theme import Theme

# ─── Theme ────────────────────────────────────────────────────────────
custom_theme = Theme({
    "rt.primary":   "bold #a78bfa",      # Soft violet
    "rt.accent":    "#34d399",           # Emerald green
    "rt.muted":     "#6b7280",           # Gray-500
    "rt.dim":       "dim #9ca3af",       # Gray-400
    "rt.error":     "bold #ef4444",      # Red
    "rt.warning":   "#f59e0b",           # Amber
    "rt.border":    "#4f46e5",           # Indigo-600
})

VERSION = "1.0.0"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


class RingthermUI:
    """Terminal output for ringtherm commands."""

    def __init__(self):
        self.console = Console(theme=custom_theme)
        self.err_console = Console(theme=custom_theme, stderr=True)
        self.json_mode = False

    def configure(self, json_mode: bool = False, file=None):
        self.json_mode = json_mode
        self.console = Console(theme=custom_theme, file=file or sys.stdout)

    # ─── Machine output ───────────────────────────────────────────────

    def emit_json(self, payload: Dict[str, Any]):
        self.console.file.write(json.dumps(payload, indent=2) + "\n")
        self.console.file.flush()

    # ─── Human output ─────────────────────────────────────────────────

    def print_table(self, title: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]):
        table = Table(title=f"[rt.primary]{title}[/]", border_style="rt.border", header_style="rt.accent")
        for col in columns:
            table.add_column(col, justify="right")
        for row in rows:
            table.add_row(*(_cell(v) for v in row))
        self.console.print(table)

    def print_report(self, title: str, values: Dict[str, Any]):
        grid = Table.grid(padding=(0, 3))
        for key, value in values.items():
            grid.add_row(f"[rt.muted]{key}[/]", _cell(value))
        self.console.print(Panel(grid, title=f"[rt.primary]{title}[/]", title_align="left", border_style="rt.border"))

    def print_written(self, path: str, what: Optional[str] = None):
        label = f"{what} " if what else ""
        self.err_console.print(f"  [rt.dim]↳ wrote {label}{path}[/]")

    def print_error(self, message: str):
        self.err_console.print(f"  [rt.error]✕ {message}[/]")

    def print_warning(self, message: str):
        self.err_console.print(f"  [rt.warning]⚠ {message}[/]")


# Singleton
ui = RingthermUI()
