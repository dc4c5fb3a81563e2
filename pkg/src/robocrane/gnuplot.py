"""gnuplot scripts for trace CSVs (three stacked panels per run)."""
from __future__ import annotations

from pathlib import Path

_PANELS = (
    ("velocity [m/s]", (("v_xd", 2, "v_{xd}"), ("v_xr", 4, "v_{xr}"))),
    ("force F [N]", (("F", 6, "F"),)),
    ("crane velocity [m/s]", (("v_ac", 7, "v_{ac}"), ("v_c", 8, "v_c"))),
)


def _panel_lines(csv_name: str, ylabel: str, series) -> list[str]:
    plots = ", ".join(
        f"'{csv_name}' using 1:{col} with lines lw 2 title '{title}'" for _, col, title in series
    )
    return [f"set ylabel '{ylabel}'", f"plot {plots}"]


def trace_script(csv_names: list[str], titles: list[str], png: str) -> str:
    """One column of panels per CSV, side by side."""
    ncols = len(csv_names)
    lines = [
        "# generated by robocrane",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set terminal pngcairo size {600 * ncols},900",
        f"set output '{png}'",
        "set grid",
        f"set multiplot layout 3,{ncols} columnsfirst",
    ]
    for name, title in zip(csv_names, titles):
        for i, (ylabel, series) in enumerate(_PANELS):
            lines.append(f"set title '{title}'" if i == 0 else "unset title")
            lines.append("set xlabel 'time [s]'" if i == 2 else "unset xlabel")
            lines += _panel_lines(name, ylabel, series)
    lines += ["unset multiplot", ""]
    return "\n".join(lines)


def write_trace_script(path: str | Path, csv_paths: list[Path], titles: list[str]) -> Path:
    path = Path(path)
    names = [p.name for p in csv_paths]
    png = path.with_suffix(".png").name
    path.write_text(trace_script(names, titles, png))
    return path
