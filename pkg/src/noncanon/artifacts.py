"""Deterministic artifact output: CSV at 17 significant digits, JSON with
stable key order.  Identical inputs must yield byte-identical files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path, obj) -> None:
    path = Path(path)
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")


def trajectory_rows(trajectory, variable_names: Sequence[str]):
    """Header and row iterator for the trajectory export: t, the state
    components, H, then the remaining monitors in insertion order."""
    monitor_names = [m for m in trajectory.monitors if m != "H"]
    header = ["t", *variable_names, "H", *monitor_names]

    def rows():
        for k in range(len(trajectory.times)):
            row = [trajectory.times[k], *trajectory.states[k]]
            row.append(trajectory.monitors["H"][k])
            row.extend(trajectory.monitors[m][k] for m in monitor_names)
            yield row

    return header, rows()
