"""Error measures and convergence tables."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .pdhg import residual_sum

__all__ = [
    "avg_abs_residual",
    "l1_relative_error",
    "TableRow",
    "convergence_table",
    "table_to_csv",
]


def avg_abs_residual(phi, grid, h, epsilon: float = 0.0) -> float:
    """Mean absolute scheme residual over the ``n_t - 1`` later slices."""
    count = int(np.prod(grid.shape)) * (grid.n_t - 1)
    return residual_sum(phi, grid, h, epsilon) / count


def l1_relative_error(phi, phi_ref, floor: Optional[float] = 1.0) -> float:
    """``mean|phi - phi_ref| / max(mean|phi_ref|, floor)`` over all points.

    The initial slice is included.  ``floor=None`` divides by the plain
    reference mean.
    """
    phi = np.asarray(phi, dtype=float)
    phi_ref = np.asarray(phi_ref, dtype=float)
    if phi.shape != phi_ref.shape:
        raise ValueError(f"shape mismatch: {phi.shape} vs {phi_ref.shape}")
    num = float(np.mean(np.abs(phi - phi_ref)))
    den = float(np.mean(np.abs(phi_ref)))
    if floor is not None:
        den = max(den, float(floor))
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return num / den


@dataclass
class TableRow:
    grid: str
    residual: float
    error: float
    ratio: Optional[float]
    converged: bool
    iterations: int
    wall_time: float


def convergence_table(run: Callable, grids: Sequence) -> List[TableRow]:
    """Solve on each grid in turn and collect the two metrics.

    ``run(grid)`` must return ``(residual, error, report)``.  ``ratio`` on row
    ``k`` is ``error[k-1] / error[k]``; it is left empty when either solve did
    not converge so that unconverged numbers never feed a rate.
    """
    if len(grids) == 0:
        raise ValueError("empty grid list")
    rows: List[TableRow] = []
    for grid in grids:
        residual, error, report = run(grid)
        label = "x".join(str(n) for n in (*grid.shape, grid.n_t))
        ratio = None
        if rows and rows[-1].converged and report.converged and error > 0:
            ratio = rows[-1].error / error
        rows.append(TableRow(label, float(residual), float(error), ratio,
                             bool(report.converged), int(report.outer_iterations),
                             float(report.wall_time)))
    return rows


def table_to_csv(rows: Iterable[TableRow]) -> str:
    buf = io.StringIO()
    fields = ["grid", "residual", "error", "ratio", "converged", "iterations", "wall_time"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        d = asdict(r)
        d = {k: (repr(v) if isinstance(v, float) else ("" if v is None else v)) for k, v in d.items()}
        w.writerow(d)
    return buf.getvalue()
