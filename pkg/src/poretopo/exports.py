"""Deterministic CSV and legacy-ASCII VTK writers.

All floats are written with ``repr`` (shortest round-trip form), so
identical inputs produce byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DesignMismatchError, OutputError
from .mesh import Mesh

CONVERGENCE_HEADER = "iter,f0,f0_over_finit,volume_fraction"
HD_HEADER = "step,stretch_mm,pore_id,area_mm2,perimeter_mm,hd_mm"
DESIGN_HEADER = "element_id,zeta,zeta_filtered,thickness_mm"
NODES_HEADER = "node_id,x_ref_mm,y_ref_mm,x_mm,y_mm"


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_lines(path: Path, lines: list[str]) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from None


def write_csv(path: str | Path, header: str, rows: list[tuple]) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _write_lines(Path(path), lines)


def write_convergence_csv(path: str | Path, history: list[tuple]) -> None:
    write_csv(path, CONVERGENCE_HEADER, history)


def write_hd_csv(path: str | Path, rows: list[tuple]) -> None:
    write_csv(path, HD_HEADER, rows)


def write_design_csv(
    path: str | Path,
    zeta: np.ndarray,
    zeta_phys: np.ndarray,
    thickness: np.ndarray,
) -> None:
    rows = [
        (e, zeta[e], zeta_phys[e], thickness[e])
        for e in range(len(zeta))
    ]
    write_csv(path, DESIGN_HEADER, rows)


def read_design_csv(path: str | Path) -> np.ndarray:
    """Read the (unfiltered) design variables back from a design CSV."""
    path = Path(path)
    try:
        lines = path.read_text().strip().splitlines()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from None
    if not lines or not lines[0].startswith("element_id"):
        raise DesignMismatchError(f"{path} is not a design CSV")
    values = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) < 2:
            raise DesignMismatchError(f"malformed design row: {line!r}")
        values.append(float(parts[1]))
    return np.asarray(values)


def write_deformed_nodes_csv(path: str | Path, mesh: Mesh, u: np.ndarray) -> None:
    disp = u.reshape(-1, 2)
    rows = [
        (i, mesh.coords[i, 0], mesh.coords[i, 1],
         mesh.coords[i, 0] + disp[i, 0], mesh.coords[i, 1] + disp[i, 1])
        for i in range(mesh.n_nodes)
    ]
    write_csv(path, NODES_HEADER, rows)


def write_displacement_csv(path: str | Path, u: np.ndarray) -> None:
    disp = u.reshape(-1, 2)
    rows = [(i, disp[i, 0], disp[i, 1]) for i in range(disp.shape[0])]
    write_csv(path, "node_id,ux_mm,uy_mm", rows)


def write_vtk(
    path: str | Path,
    mesh: Mesh,
    cell_data: dict[str, np.ndarray],
    title: str = "poretopo design",
) -> None:
    """Legacy ASCII VTK unstructured grid with per-element scalars."""
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for i in range(mesh.n_nodes):
        lines.append(f"{_fmt(mesh.coords[i, 0])} {_fmt(mesh.coords[i, 1])} 0.0")
    lines.append(f"CELLS {mesh.n_elements} {5 * mesh.n_elements}")
    for e in range(mesh.n_elements):
        a, b, c, d = mesh.conn[e]
        lines.append(f"4 {a} {b} {c} {d}")
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines.extend(["9"] * mesh.n_elements)  # VTK_QUAD
    lines.append(f"CELL_DATA {mesh.n_elements}")
    for name, values in cell_data.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_fmt(v) for v in values)
    _write_lines(Path(path), lines)


def read_vtk_cell_count(path: str | Path) -> int:
    """Cell count of a legacy VTK file (round-trip check helper)."""
    for line in Path(path).read_text().splitlines():
        if line.startswith("CELLS "):
            return int(line.split()[1])
    raise OutputError(f"no CELLS section in {path}")
