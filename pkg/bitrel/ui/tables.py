from typing import Dict

import pandas as pd
from rich.console import Console
from rich.table import Table

from bitrel.models.schemas import Statistic

console = Console()


def corpus_table(type_counts: Dict[str, int]) -> Table:
    table = Table(title="Generated corpus")
    table.add_column("System type")
    table.add_column("Systems", justify="right")
    for system_type, count in type_counts.items():
        table.add_row(system_type, str(count))
    table.add_row("total", str(sum(type_counts.values())), style="bold")
    return table


def summary_table(summary: pd.DataFrame, title: str = "Mean statistics per metric") -> Table:
    table = Table(title=title)
    table.add_column("Metric")
    table.add_column("Systems", justify="right")
    for statistic in Statistic:
        table.add_column(statistic.value.upper(), justify="right")
    table.add_column("Useful")
    for row in summary.itertuples(index=False):
        cells = [f"{getattr(row, s.value):.3f}" if pd.notna(getattr(row, s.value)) else "-" for s in Statistic]
        table.add_row(row.metric, str(row.systems), *cells, "yes" if row.useful else "no")
    return table
