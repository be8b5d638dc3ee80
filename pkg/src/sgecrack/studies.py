"""Single runs, convergence sweeps and size-effect sweeps driven by a RunConfig.

Every sweep point is an independent task.  Points run in a process pool when
more than one worker is requested, and each point writes its own JSON record
atomically under ``<out>/points``.  Tables are assembled in sweep order, so
the output does not depend on completion order.  A failing point is recorded
in ``failures.json`` and the study carries on.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plots
from .assembly import solve_case, virtual_crack_extension
from .asymptotics import classical_reference_j, j_integral
from .bell import quadrature
from .config import RunConfig, from_dict
from .errors import ConfigurationError, SGECrackError
from .mesh import generate_quarter_mesh
from .postprocess import (
    PROFILE_COLUMNS,
    bottom_line_profile,
    default_profile_points,
    summarize,
    write_profile_csv,
)

CONVERGENCE_COLUMNS = ("value", "kt", "kt_conventional", "K1", "K2", "K3", "K4", "J", "J_normalized",
                       "residual_norm", "nodes")
SIZE_EFFECT_COLUMNS = ("ell_over_L", "d_over_L", "d_over_ell",
                       "K1_n", "K2_n", "K3_n", "K4_n",
                       "J_I_bar", "J_II_bar", "J_I_bar_classical", "J_II_bar_classical",
                       "inv_kt_I", "inv_kt_II")


# ---------------------------------------------------------------------------
# shared helpers

def write_json(path, data) -> Path:
    """Write JSON atomically with sorted keys (byte-stable for equal input)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)
    return path


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])
    tmp.replace(path)
    return path


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    return x


def solve_config(cfg: RunConfig):
    """Mesh and solve the case described by ``cfg``."""
    mesh = generate_quarter_mesh(cfg.domain())
    return solve_case(mesh, cfg.material_params(), quadrature(cfg.quadrature), cfg.mode, cfg.load,
                      enrich=cfg.enrichment)


def _describe(cfg: RunConfig) -> str:
    g, m = cfg.geometry, cfg.material
    return (f"mode {cfg.mode}, d={g.d:g}, L={g.L:g}, R={g.R:g}, M={g.M}, ell={m.ell:g}, "
            f"quadrature {cfg.quadrature}, enrichment {'on' if cfg.enrichment else 'off'}")


def _with_context(cfg: RunConfig, exc: SGECrackError) -> SGECrackError:
    return type(exc)(f"{_describe(cfg)}: {exc}")


def _map(func, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        return list(pool.map(func, tasks))


def _guarded(func, task):
    """Run one point; return ``(result, None)`` or ``(None, message)``."""
    try:
        return func(task), None
    except (SGECrackError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _d_min(cfg: RunConfig) -> float:
    return cfg.study.d_min_over_L * cfg.geometry.L


# ---------------------------------------------------------------------------
# single case

def run_single(cfg: RunConfig, out_dir, n_profile: int = 201) -> dict:
    """Solve one case and write ``summary.json``, profile CSVs and their SVG plots.

    Returns the summary dictionary that was written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        sol = solve_config(cfg)
        summary = summarize(sol, _d_min(cfg)).to_dict()
        summary["j_virtual_extension"] = virtual_crack_extension(sol)
        g = cfg.geometry
        xs = default_profile_points(g.d, g.L, n_profile)
        samples = bottom_line_profile(sol, xs)
    except ConfigurationError:
        raise
    except SGECrackError as exc:
        raise _with_context(cfg, exc) from exc
    record = {"config": cfg.to_dict(), "summary": summary}
    write_json(out / "summary.json", record)

    face = [s for s in samples if s.point[0] < 0.0]
    write_profile_csv(out / "crack_opening.csv", face, cfg.load)
    write_profile_csv(out / "bottom_line.csv", samples, cfg.load)
    comp = "v" if cfg.mode == "I" else "u"
    plots.line_plot(out / "crack_opening.svg",
                    [(f"{comp} on crack face", [s.point[0] for s in face], [getattr(s, comp) for s in face])],
                    "x [m]", f"{comp} [m]", f"Crack face displacement, mode {cfg.mode}")
    series = [(name, [s.point[0] for s in samples], [s.stress[i] / cfg.load for s in samples])
              for i, name in enumerate(PROFILE_COLUMNS[3:])]
    plots.line_plot(out / "bottom_line.svg", series, "x [m]", "stress / t",
                    f"Cauchy stress along y = 0, mode {cfg.mode}")
    return record


# ---------------------------------------------------------------------------
# convergence

def _convergence_variant(cfg: RunConfig, value) -> RunConfig:
    s = cfg.study.sweep
    if s == "R_over_ell":
        return replace(cfg, geometry=replace(cfg.geometry, R=float(value) * cfg.material.ell))
    if s == "M":
        return replace(cfg, geometry=replace(cfg.geometry, M=int(value)))
    return replace(cfg, quadrature=int(value))


def _health(sol) -> dict:
    """Residual, equilibrium and symmetry measures of one solve."""
    return {
        "residual_norm": float(sol.residual_norm), "equilibrium_error": float(sol.equilibrium_error),
        "symmetry_error": float(sol.symmetry_error), "out_of_balance": float(sol.out_of_balance),
    }


def _convergence_point(task):
    cfg_dict, value = task
    cfg = _convergence_variant(from_dict(cfg_dict), value)
    cfg.domain().validate()
    sol = solve_config(cfg)
    k = sol.amplitudes
    j1, j2 = j_integral(k, sol.material)
    s = summarize(sol, _d_min(cfg))
    row = {
        "value": float(value), "kt": s.kt, "K1": float(k[0]), "K2": float(k[1]), "K3": float(k[2]),
        "K4": float(k[3]), "J": float(j1 + j2), "J_normalized": s.j_normalized,
        "residual_norm": s.residual_norm, "nodes": s.mesh["nodes"], "kt_conventional": math.nan,
        "health": [_health(sol)],
    }
    if cfg.study.sweep == "R_over_ell":
        conv = solve_config(replace(cfg, enrichment=False))
        row["kt_conventional"] = summarize(conv, _d_min(cfg)).kt
        row["health"].append(_health(conv))
    return row


def _run_points(func, tasks, keys, out: Path, threads: int):
    points = out / "points"
    points.mkdir(parents=True, exist_ok=True)
    results = _map(_PointCall(func, points), list(zip(keys, tasks)), threads)
    rows, failures = [], []
    for key, (row, err) in zip(keys, results):
        if err is None:
            rows.append(row)
        else:
            failures.append({"point": key, "error": err})
    return rows, failures


class _PointCall:
    """Picklable wrapper: runs one point and writes its record atomically."""

    def __init__(self, func, points: Path):
        self.func = func
        self.points = points

    def __call__(self, keyed_task):
        key, task = keyed_task
        row, err = _guarded(self.func, task)
        if err is None:
            write_json(self.points / f"{key}.json", row)
        return row, err


def run_convergence(cfg: RunConfig, out_dir, threads: int = 1) -> dict:
    """Sweep R/ell, M or the quadrature rule and tabulate kt, K_n and J.

    The R/ell sweep also solves each point without enrichment so that both
    element types appear in ``convergence.csv`` and ``convergence.svg``.
    """
    if cfg.study.kind != "convergence":
        raise ConfigurationError("configuration does not describe a convergence study")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweep = cfg.study.sweep
    values = list(cfg.study.values)
    tasks = [(cfg.to_dict(), v) for v in values]
    keys = [f"{sweep}_{i:03d}" for i in range(len(values))]
    rows, failures = _run_points(_convergence_point, tasks, keys, out, threads)
    write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, rows)
    write_json(out / "failures.json", failures)
    xs = [r["value"] for r in rows]
    series = [("enriched" if cfg.enrichment else "conventional", xs, [r["kt"] for r in rows])]
    if sweep == "R_over_ell":
        series.append(("conventional", xs, [r["kt_conventional"] for r in rows]))
    xlabel = {"R_over_ell": "R / ell", "M": "M", "quadrature": "quadrature points"}[sweep]
    plots.line_plot(out / "convergence.svg", series, xlabel, "kt", f"Tip stress concentration, mode {cfg.mode}",
                    logx=sweep == "R_over_ell")
    return {"rows": rows, "failures": failures}


# ---------------------------------------------------------------------------
# size effect

def _size_variant(cfg: RunConfig, d_over_L: float, ell_over_L: float, mode: str) -> RunConfig:
    L = cfg.geometry.L
    ell = ell_over_L * L
    s = cfg.study
    if ell > 0.0:
        geom = replace(cfg.geometry, d=d_over_L * L, R=s.R_over_ell * ell)
        return replace(cfg, mode=mode, geometry=geom, material=replace(cfg.material, ell=ell))
    geom = replace(cfg.geometry, d=d_over_L * L, R=s.classical_R_over_d * d_over_L * L)
    return replace(cfg, mode=mode, geometry=geom, material=replace(cfg.material, ell=0.0), enrichment=False)


def _size_point(task):
    """One solve of the size-effect sweep; ``ell_over_L == 0`` is the classical run."""
    cfg_dict, d_over_L, ell_over_L, mode = task
    cfg = _size_variant(from_dict(cfg_dict), d_over_L, ell_over_L, mode)
    cfg.domain().validate()
    sol = solve_config(cfg)
    j0 = classical_reference_j(sol.material, cfg.load, _d_min(cfg))
    if ell_over_L == 0.0:
        return {"J_bar": virtual_crack_extension(sol) / j0, "health": [_health(sol)]}
    k = sol.amplitudes
    s = summarize(sol, _d_min(cfg))
    scale = math.sqrt(cfg.material.ell) / cfg.load
    j1, j2 = j_integral(k, sol.material)
    return {
        "K_n": [float(x) * scale for x in k], "J_bar": float(j1 + j2) / j0, "kt": s.kt,
        "residual_norm": s.residual_norm, "health": [_health(sol)],
    }


def run_size_effect(cfg: RunConfig, out_dir, threads: int = 1) -> dict:
    """Sweep d/L for each ell/L in both modes.

    Amplitudes are normalized as ``K_n sqrt(ell) / t``; energy release is
    normalized by the classical value for a crack of length ``d_min``.  The
    classical comparison solves the same geometry with ``ell = 0`` and
    obtains J by virtual crack extension.
    """
    if cfg.study.kind != "size-effect":
        raise ConfigurationError("configuration does not describe a size-effect study")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = cfg.study
    base = cfg.to_dict()
    tasks, keys = [], []
    for i, dl in enumerate(s.d_over_L):
        for mode in ("I", "II"):
            tasks.append((base, dl, 0.0, mode))
            keys.append(f"classical_d{i:03d}_mode{mode}")
    for j, el in enumerate(s.ell_over_L):
        for i, dl in enumerate(s.d_over_L):
            for mode in ("I", "II"):
                tasks.append((base, dl, el, mode))
                keys.append(f"sge_ell{j:03d}_d{i:03d}_mode{mode}")
    _, solve_failures = _run_points(_size_point, tasks, keys, out, threads)
    errors = {f["point"]: f["error"] for f in solve_failures}
    done = {}
    for key in keys:
        if key not in errors:
            done[key] = json.loads((out / "points" / f"{key}.json").read_text())

    rows, failures = [], []
    for j, el in enumerate(s.ell_over_L):
        for i, dl in enumerate(s.d_over_L):
            need = [f"classical_d{i:03d}_modeI", f"classical_d{i:03d}_modeII",
                    f"sge_ell{j:03d}_d{i:03d}_modeI", f"sge_ell{j:03d}_d{i:03d}_modeII"]
            missing = {k: errors[k] for k in need if k not in done}
            if missing:
                failures.append({"point": f"ell{j:03d}_d{i:03d}", "ell_over_L": el, "d_over_L": dl,
                                 "errors": missing})
                continue
            c1, c2, p1, p2 = (done[k] for k in need)
            rows.append({
                "ell_over_L": el, "d_over_L": dl, "d_over_ell": dl / el,
                "K1_n": p1["K_n"][0], "K2_n": p1["K_n"][1], "K3_n": p2["K_n"][2], "K4_n": p2["K_n"][3],
                "J_I_bar": p1["J_bar"], "J_II_bar": p2["J_bar"],
                "J_I_bar_classical": c1["J_bar"], "J_II_bar_classical": c2["J_bar"],
                "inv_kt_I": 1.0 / p1["kt"], "inv_kt_II": 1.0 / p2["kt"],
            })
    write_csv(out / "size_effect.csv", SIZE_EFFECT_COLUMNS, rows)
    write_json(out / "failures.json", failures)
    _size_plots(out, rows, s.ell_over_L)
    return {"rows": rows, "failures": failures}


def _size_plots(out: Path, rows, ells) -> None:
    def series(col, label_fmt="ell/L = {:g}"):
        res = []
        for el in ells:
            sel = [r for r in rows if r["ell_over_L"] == el]
            res.append((label_fmt.format(el), [r["d_over_L"] for r in sel], [r[col] for r in sel]))
        return res

    amp = []
    for n in range(1, 5):
        amp += [(f"K{n}, {label}", xs, ys) for label, xs, ys in series(f"K{n}_n")]
    plots.line_plot(out / "size_effect_amplitudes.svg", amp, "d / L", "K_n sqrt(ell) / t",
                    "Amplitude factors")
    jser = series("J_I_bar", "mode I, ell/L = {:g}") + series("J_II_bar", "mode II, ell/L = {:g}")
    if rows:
        first = [r for r in rows if r["ell_over_L"] == rows[0]["ell_over_L"]]
        xs = [r["d_over_L"] for r in first]
        jser += [("mode I, classical", xs, [r["J_I_bar_classical"] for r in first]),
                 ("mode II, classical", xs, [r["J_II_bar_classical"] for r in first])]
    plots.line_plot(out / "size_effect_j.svg", jser, "d / L", "J / J0", "Normalized energy release")
    kser = series("inv_kt_I", "mode I, ell/L = {:g}") + series("inv_kt_II", "mode II, ell/L = {:g}")
    plots.line_plot(out / "size_effect_kt.svg", kser, "d / L", "1 / kt", "Inverse tip stress concentration")
