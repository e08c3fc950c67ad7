"""Command-line front end: ``hjpdhg solve|table|compare``.

Configuration is one JSON document.  Either name a preset::

    {"preset": "quad", "dim": 1, "grid": {"n_x": 20, "n_t": 11},
     "cfg": {"delta": 1e-6}, "reference": true}

or spell the problem out (names refer to the built-in catalogues)::

    {"hamiltonian": {"name": "norm_potential", "initial": "sin_sum",
                     "shift": "bump", "epsilon": 0.0},
     "dim": 1, "grid": {"n_x": 80, "n_t": 41}}

``table`` takes ``"grids": [[n_x, n_t], ...]`` (2D: ``[n_x, n_y, n_t]``)
instead of ``grid``.

Output layout
-------------
1D: ``phi.csv`` with one row per spatial index ``i`` and one column per
time index ``k``.  2D: ``phi_k{k}.csv`` per time slice (rows ``i``, columns
``j``) and ``phi_index.csv`` listing ``k,t,file``.  Numbers are written with
the shortest decimal that round-trips.  ``summary.json`` holds the resolved
configuration, the average residual, the error against the reference when
requested, iteration counts and wall time.

Exit status: 0 converged, 2 finished without converging, 1 bad input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .hamiltonian import HomogeneousData
from .metrics import avg_abs_residual, convergence_table, l1_relative_error, table_to_csv
from .presets import INITIAL, SHIFTS, Preset, get_preset, make_grid, reference_solution, resolve_config
from .pdhg import DivergenceError, SolveReport, solve_windowed

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2

EPILOG = """\
CSV layout:
  1D  phi.csv: row i = spatial index, column k = time index.
  2D  phi_k{k}.csv per time slice (row i, column j) plus phi_index.csv
      with header k,t,file.
  Values use the shortest decimal that round-trips to the same double.

exit status: 0 converged, 2 not converged (outputs flagged partial), 1 bad input
"""


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

def load_config(path: str) -> Dict[str, Any]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def preset_from_config(doc: Dict[str, Any]) -> Preset:
    if "preset" in doc and "hamiltonian" in doc:
        raise ConfigError("give either 'preset' or 'hamiltonian', not both")
    if "preset" in doc:
        try:
            return get_preset(doc["preset"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    spec = doc.get("hamiltonian")
    if not isinstance(spec, dict):
        raise ConfigError("config needs 'preset' or a 'hamiltonian' object")
    name = spec.get("name")
    initial = spec.get("initial")
    shift = spec.get("shift", "none")
    if initial not in INITIAL:
        raise ConfigError(f"unknown initial condition {initial!r}; choose from {sorted(INITIAL)}")
    if shift not in SHIFTS:
        raise ConfigError(f"unknown shift {shift!r}; choose from {sorted(SHIFTS)}")
    if name not in ("quadratic", "quadratic_shifted", "l1_homogeneous", "norm_potential"):
        raise ConfigError(f"unknown Hamiltonian {name!r}")
    if name == "quadratic" and shift != "none":
        raise ConfigError("'quadratic' takes no shift; use 'quadratic_shifted'")
    reference = spec.get("reference", "explicit")
    if reference not in ("explicit", "hopf_lax_quadratic", "hopf_lax_l1"):
        raise ConfigError(f"unknown reference {reference!r}")
    return Preset("custom", name, initial, shift=shift, epsilon=float(spec.get("epsilon", 0.0)),
                  solver=spec.get("solver", "homogeneous" if name == "l1_homogeneous" else "general"),
                  reference=reference, slope_bound=float(spec.get("slope_bound", 1.0)), cfg={})


def _dim(doc) -> int:
    dim = doc.get("dim", 1)
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim!r}")
    return dim


def _grid(dim: int, n_x, n_t, n_y=None):
    try:
        if any(not isinstance(v, int) or isinstance(v, bool) for v in (n_x, n_t)) or \
                (n_y is not None and not isinstance(n_y, int)):
            raise ValueError("grid sizes must be integers")
        return make_grid(dim, n_x, n_t, n_y)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid: {exc}") from exc


def grid_from_config(doc, dim):
    g = doc.get("grid")
    if not isinstance(g, dict):
        raise ConfigError("config needs a 'grid' object with n_x and n_t")
    return _grid(dim, g.get("n_x"), g.get("n_t"), g.get("n_y") if dim == 2 else None)


def grids_from_config(doc, dim):
    items = doc.get("grids")
    if not isinstance(items, list):
        raise ConfigError("config needs a 'grids' list")
    if not items:
        raise ConfigError("grid list is empty")
    out = []
    for item in items:
        want = 2 if dim == 1 else 3
        if not isinstance(item, list) or len(item) != want:
            raise ConfigError(f"each grid entry must list {want} integers, got {item!r}")
        if dim == 1:
            out.append(_grid(1, item[0], item[1]))
        else:
            out.append(_grid(2, item[0], item[2], item[1]))
    return out


def cfg_for(preset, grid, doc):
    overrides = doc.get("cfg", {})
    if not isinstance(overrides, dict):
        raise ConfigError("'cfg' must be an object")
    try:
        return resolve_config(preset, grid, overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver settings: {exc}") from exc


# ---------------------------------------------------------------- output

def _fmt(v: float) -> str:
    return repr(float(v))


def write_matrix(path: str, a: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in np.atleast_2d(a):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_matrix(path: str) -> np.ndarray:
    with open(path) as fh:
        rows = [[float(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    if len({len(r) for r in rows}) > 1:
        raise ValueError(f"ragged CSV {path}")
    return np.array(rows, dtype=float)


INDEX_HEADER = "k,t,file"


def write_solution(out_dir: str, phi: np.ndarray, grid) -> List[str]:
    """Write ``phi`` (time-major) in the documented CSV layout."""
    os.makedirs(out_dir, exist_ok=True)
    if grid.ndim == 1:
        path = os.path.join(out_dir, "phi.csv")
        write_matrix(path, phi.T)  # rows i, columns k
        return [path]
    files = []
    lines = [INDEX_HEADER]
    for k in range(grid.n_t):
        name = f"phi_k{k}.csv"
        write_matrix(os.path.join(out_dir, name), phi[k])
        files.append(os.path.join(out_dir, name))
        lines.append(f"{k},{_fmt(grid.t[k])},{name}")
    index = os.path.join(out_dir, "phi_index.csv")
    with open(index, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return [index] + files


def read_solution(path: str) -> np.ndarray:
    """Inverse of :func:`write_solution`; returns a time-major array."""
    with open(path) as fh:
        first = fh.readline().strip()
    if first == INDEX_HEADER:
        base = os.path.dirname(path)
        with open(path) as fh:
            next(fh)
            names = [line.strip().split(",")[2] for line in fh if line.strip()]
        return np.stack([read_matrix(os.path.join(base, n)) for n in names])
    return read_matrix(path).T


# ---------------------------------------------------------------- commands

def _merge(reports: Sequence[SolveReport]) -> Dict[str, Any]:
    return {
        "converged": all(r.converged for r in reports),
        "outer_iterations": int(sum(r.outer_iterations for r in reports)),
        "max_window_iterations": int(max(r.outer_iterations for r in reports)),
        "wall_time": float(sum(r.wall_time for r in reports)),
    }


def _solve(preset, grid, cfg):
    h, g = preset.build(grid.ndim)
    phi, reports = solve_windowed(grid, h, g, cfg)
    if isinstance(h, HomogeneousData):
        h = h.hamiltonian()
    residual = avg_abs_residual(phi, grid, h, cfg.epsilon)
    return phi, reports, residual


def _errors(phi, ref):
    return {"error": l1_relative_error(phi, ref),
            "error_unfloored": l1_relative_error(phi, ref, floor=None)}


def cmd_solve(args) -> int:
    doc = load_config(args.config)
    preset = preset_from_config(doc)
    dim = _dim(doc)
    grid = grid_from_config(doc, dim)
    cfg = cfg_for(preset, grid, doc)
    want_ref = bool(doc.get("reference", False))
    refine = int(doc.get("reference_refine", 8))

    try:
        phi, reports, residual = _solve(preset, grid, cfg)
    except DivergenceError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    summary: Dict[str, Any] = {"config": {**doc, "resolved_cfg": asdict(cfg)}, "residual": residual}
    summary.update(_merge(reports))
    if want_ref:
        summary.update(_errors(phi, reference_solution(preset, grid, refine)))
    summary["partial"] = not summary["converged"]

    out = args.out or "."
    files = write_solution(out, phi, grid)
    summary["files"] = [os.path.basename(f) for f in files]
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    if not summary["converged"]:
        print(f"not converged after {summary['outer_iterations']} iterations; "
              f"outputs in {out} are partial", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_table(args) -> int:
    doc = load_config(args.config)
    preset = preset_from_config(doc)
    dim = _dim(doc)
    grids = grids_from_config(doc, dim)
    cfgs = {id(g): cfg_for(preset, g, doc) for g in grids}
    refine = int(doc.get("reference_refine", 8))
    floor = doc.get("error_floor", 1.0)

    def run(grid):
        cfg = cfgs[id(grid)]
        phi, reports, residual = _solve(preset, grid, cfg)
        ref = reference_solution(preset, grid, refine)
        merged = _merge(reports)
        report = SolveReport(merged["converged"], merged["outer_iterations"],
                             wall_time=merged["wall_time"])
        return residual, l1_relative_error(phi, ref, floor=floor), report

    try:
        rows = convergence_table(run, grids)
    except DivergenceError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    text = table_to_csv(rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "table.csv"), "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if not all(r.converged for r in rows):
        print("some grids did not converge; their rows are marked", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        phi = read_solution(args.solution)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read solution {args.solution}: {exc}") from exc
    if args.against:
        try:
            ref = read_solution(args.against)
        except (OSError, ValueError, IndexError) as exc:
            raise ConfigError(f"cannot read {args.against}: {exc}") from exc
    elif args.config:
        doc = load_config(args.config)
        preset = preset_from_config(doc)
        dim = _dim(doc)
        grid = grid_from_config(doc, dim)
        ref = reference_solution(preset, grid, int(doc.get("reference_refine", 8)))
    else:
        raise ConfigError("compare needs --against FILE or --config FILE")
    if phi.shape != ref.shape:
        raise ConfigError(f"shape mismatch: solution {phi.shape} vs reference {ref.shape}")
    result = _errors(phi, ref)
    result["per_slice"] = [l1_relative_error(phi[k], ref[k]) for k in range(phi.shape[0])]
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hjpdhg",
        description="Implicit Hamilton-Jacobi solver driven by preconditioned PDHG.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS/FFT thread cap (default: library default, all cores)")
    common.add_argument("--seed", type=int, default=None, help="seed for numpy's global RNG")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve one problem")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None, help="output directory (default: current)")
    t = sub.add_parser("table", parents=[common], help="convergence table over grids")
    t.add_argument("--config", required=True)
    t.add_argument("--out", default=None)
    c = sub.add_parser("compare", parents=[common], help="error of a stored solution")
    c.add_argument("--solution", required=True, help="phi.csv or phi_index.csv")
    c.add_argument("--against", default=None, help="second stored solution")
    c.add_argument("--config", default=None, help="config naming the reference problem")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("--threads must be positive", file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None:
        np.random.seed(args.seed)
    handler = {"solve": cmd_solve, "table": cmd_table, "compare": cmd_compare}[args.command]
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                return handler(args)
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
