"""Run outputs: legacy ASCII VTK per level, one CSV table and a text log.

Floats are written with ``repr`` so identical runs give identical bytes.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .estimator import LevelResult, RunRecord, sigma_difference

CSV_COLUMNS = ("level", "n_elements", "n_dofs", "J_h", "eta_omega", "eta_c1", "eta_c2", "eta_s",
               "eta_total", "dist_surrogate", "iterations")


class OutputError(OSError):
    pass


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def vtk_text(result: LevelResult, title: str | None = None) -> str:
    mesh = result.mesh
    macro = result.macro
    out = io.StringIO()
    w = out.write
    w("# vtk DataFile Version 3.0\n")
    w((title or f"level {result.level}") + "\n")
    w("ASCII\nDATASET UNSTRUCTURED_GRID\n")
    w(f"POINTS {mesh.n_vertices} double\n")
    for x, y in mesh.vertices:
        w(f"{_fmt(x)} {_fmt(y)} 0.0\n")
    m = mesh.n_triangles
    w(f"CELLS {m} {4 * m}\n")
    for a, b, c in mesh.triangles:
        w(f"3 {a} {b} {c}\n")
    w(f"CELL_TYPES {m}\n")
    w("5\n" * m)
    w(f"POINT_DATA {mesh.n_vertices}\n")
    _scalars(w, "u_h", result.state.u)
    w(f"CELL_DATA {m}\n")
    w("SCALARS sigma double 2\nLOOKUP_TABLE default\n")
    for s0, s1 in macro.sigma:
        w(f"{_fmt(s0)} {_fmt(s1)}\n")
    _scalars(w, "xi", macro.xi)
    _scalars(w, "micro_flag", macro.micro_flag.astype(int), "int")
    region = macro.unique_region if macro.unique_region is not None else np.zeros(m, dtype=bool)
    _scalars(w, "unique_region", region.astype(int), "int")
    _scalars(w, "indicator", result.report.local_indicators())
    return out.getvalue()


def _scalars(w, name, values, kind="double"):
    w(f"SCALARS {name} {kind} 1\nLOOKUP_TABLE default\n")
    w("".join(_fmt(v) + "\n" for v in values))


def csv_text(record: RunRecord) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for lvl in record.levels:
        row = lvl.row()
        row["eta_total"] = lvl.report.total
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return out.getvalue()


def log_text(record: RunRecord, header: str = "") -> str:
    lines = [header.rstrip("\n")] if header else []
    prev = None
    for lvl in record.levels:
        r = lvl.report
        lines.append(f"level {lvl.level}: elements={lvl.n_elements} dofs={lvl.n_dofs} "
                     f"J_h={_fmt(lvl.j_h)} eta={_fmt(r.total)} multiplier={_fmt(lvl.state.multiplier)} "
                     f"active={int(lvl.state.active.sum())}")
        if prev is not None and _is_refinement(prev, lvl):
            diff = sigma_difference(prev.mesh, prev.macro.sigma, lvl.mesh, lvl.macro.sigma)
            lines.append(f"  sigma_difference_to_previous={_fmt(diff)} "
                         f"ratio_to_previous_eta={_fmt(diff / prev.report.total) if prev.report.total > 0 else 'nan'}")
        for rec in lvl.state.history:
            lines.append("  " + rec.format())
        prev = lvl
    return "\n".join(lines) + "\n"


def _is_refinement(coarse: LevelResult, fine: LevelResult) -> bool:
    parent = fine.mesh.triangle_parent
    return len(parent) > 0 and parent.min() >= 0 and parent.max() < coarse.mesh.n_triangles


def write_outputs(record: RunRecord, directory, header: str = "", stem: str = "run") -> list:
    """Write ``level_XX.vtk`` files, ``<stem>.csv`` and ``<stem>.log``; return the paths."""
    directory = Path(directory)
    paths = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for lvl in record.levels:
            path = directory / f"level_{lvl.level:02d}.vtk"
            path.write_text(vtk_text(lvl), encoding="utf-8")
            paths.append(path)
        path = directory / f"{stem}.csv"
        path.write_text(csv_text(record), encoding="utf-8")
        paths.append(path)
        path = directory / f"{stem}.log"
        path.write_text(log_text(record, header), encoding="utf-8")
        paths.append(path)
    except OSError as exc:
        raise OutputError(f"cannot write {exc.filename or directory}: {exc.strerror}") from exc
    return paths


def read_vtk_fields(path) -> dict:
    """Minimal reader for files written by :func:`vtk_text` (tests and demos)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    fields = {}
    i = 0
    n_points = n_cells = 0
    section = None
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        if parts[0] == "POINTS":
            n_points = int(parts[1])
            fields["points"] = np.array([list(map(float, lines[i + 1 + k].split()))
                                         for k in range(n_points)])
            i += n_points + 1
            continue
        if parts[0] == "CELLS":
            n_cells = int(parts[1])
            fields["cells"] = np.array([list(map(int, lines[i + 1 + k].split()))[1:]
                                        for k in range(n_cells)])
            i += n_cells + 1
            continue
        if parts[0] in ("POINT_DATA", "CELL_DATA"):
            section = parts[0]
        if parts[0] == "SCALARS":
            count = n_points if section == "POINT_DATA" else n_cells
            ncomp = int(parts[3]) if len(parts) > 3 else 1
            vals = np.array([list(map(float, lines[i + 2 + k].split())) for k in range(count)])
            fields[parts[1]] = vals if ncomp > 1 else vals[:, 0]
            i += count + 2
            continue
        i += 1
    return fields
