"""Command-line experiment runner.

Every subcommand reads one INI spec (``--spec``, a path or the name of a
bundled spec), validates it fully before any solver step, and writes its
artifacts under ``--out``: field files in the frontlim text format, CSV
metrics, a JSON report where applicable, and matplotlib figures next to
the delimited output (``--no-figures`` to skip). Identical specs produce
byte-identical field files and reports; nothing in the pipeline draws
random numbers.

Exit codes: 0 success, 2 spec or validation error (the message names the
violated invariant), 3 numerical failure (the message names the solver
and step).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import arrival as arrival_mod
from . import config as cfgmod
from . import hamilton_jacobi as hj
from . import reaction_diffusion as rd
from .asymptotics import ArrivalReference, generation_time, \
    run_convergence_study
from .errors import NumericalError, SpecError
from .fields import ScalarField, write_field, write_field_csv, zero_level_set
from .models import BistableModel, validate_model

log = logging.getLogger("frontlim")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)

def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)

def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")

def _write_json(path: Path, payload) -> None:
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")

def _outdir(args) -> Path:
    out = Path(args.out)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    return out

def _build_model_any(cfg):
    """Bistable model if epsilon is configured, velocity model otherwise.

    A spec without a [model] section means zero speed (pure curvature
    flow for mcf-run, the identity for hj-run).
    """
    if not cfg.has_section("model"):
        return None
    if cfg.has_option("model", "epsilon"):
        return cfgmod.build_bistable(cfg)
    return cfgmod.build_velocity(cfg)

def _export_trajectory(out: Path, grid, times, snapshots, level=None) -> None:
    fdir = out / "fields"
    fdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, (t, snap) in enumerate(zip(times, snapshots)):
        path = fdir / ("u_%05d.txt" % i)
        write_field(snap, path)
        tracked = snap.values if level is None else snap.values - level
        triple = zero_level_set(ScalarField(grid, tracked))
        rows.append((t, str(path.relative_to(out)), triple.gamma.shape[0]))
    _write_csv(out / "index.csv", ["t", "path", "front_point_count"], rows)

def _figure_trajectory(out: Path, grid, times, snapshots, title: str) -> None:
    from . import plots

    if grid.dim == 1:
        keep = np.unique(np.linspace(0, len(times) - 1, 9).astype(int))
        plots.save_profiles(grid.axis_coords(0),
                            [snapshots[i].values for i in keep],
                            ["t=%.3g" % times[i] for i in keep],
                            out / "figures" / "profiles.png", title=title)
    else:
        plots.save_field(snapshots[-1], out / "figures" / "final.png",
                         title="%s (t=%.3g)" % (title, times[-1]))

def _cmd_rd_run(cfg, args) -> int:
    out = _outdir(args)
    grid = cfgmod.build_grid(cfg)
    model = cfgmod.build_bistable(cfg)
    rdc = cfgmod.build_rd_config(cfg, model, grid)
    g = cfgmod.build_rd_initial(cfg, model, grid)
    traj = rd.run(rdc, g)
    _export_trajectory(out, grid, traj.times, traj.snapshots,
                       level=traj.unstable_level)
    if args.figures:
        _figure_trajectory(out, grid, traj.times, traj.snapshots,
                           cfgmod.experiment_name(cfg, "rd-run"))
    return 0

def _cmd_hj_like(cfg, args, curvature: bool) -> int:
    out = _outdir(args)
    grid = cfgmod.build_grid(cfg)
    model = _build_model_any(cfg)
    hjc = cfgmod.build_hj_config(cfg, grid, model, curvature=curvature)
    u0 = cfgmod.build_levelset_initial(cfg, grid)
    sol = hj.run(hjc, u0, model)
    _export_trajectory(out, grid, sol.times, sol.snapshots)
    if args.figures:
        _figure_trajectory(out, grid, sol.times, sol.snapshots,
                           cfgmod.experiment_name(cfg,
                                                  "mcf-run" if curvature else "hj-run"))
    return 0

def _merge_model_file(cfg, path: str):
    other = cfgmod.load_spec(path)
    for section in ("model", "grid"):
        if other.has_section(section):
            if not cfg.has_section(section):
                cfg.add_section(section)
            for key, value in other.items(section):
                cfg.set(section, key, value)
    return cfg

def _cmd_arrival(cfg, args) -> int:
    out = _outdir(args)
    if args.model:
        cfg = _merge_model_file(cfg, args.model)
    grid = cfgmod.build_grid(cfg)
    model = _build_model_any(cfg)
    if model is None:
        raise SpecError("arrival needs a [model] section with a positive speed")
    raw_seed = args.seed or cfgmod._get(cfg, "experiment", "seed", None)
    if raw_seed is None:
        raise SpecError("arrival needs --seed or [experiment] seed")
    seed = cfgmod.parse_seed(raw_seed, grid)
    neighbors = cfgmod._get_int(cfg, "solver", "neighbors", 8)
    T = arrival_mod.arrival_time(seed, model, grid, neighbors=neighbors)
    write_field(T.field(), out / "arrival_time.txt")
    write_field_csv(T.field(), out / "arrival_time.csv")
    if args.figures:
        from . import plots
        plots.save_field(T.field(), out / "figures" / "arrival_time.png",
                         title="arrival time", front=False)
    return 0

def _cmd_represent(cfg, args) -> int:
    out = _outdir(args)
    grid = cfgmod.build_grid(cfg)
    model = _build_model_any(cfg)
    if model is None:
        raise SpecError("represent needs a [model] section with a positive speed")
    u0 = cfgmod.build_levelset_initial(cfg, grid)
    times = cfgmod.experiment_times(cfg)
    neighbors = cfgmod._get_int(cfg, "solver", "neighbors", 8)
    front_rows = []
    overlays = []
    for i, t in enumerate(times):
        w = arrival_mod.represent_field(t, u0, model, neighbors=neighbors)
        write_field(w, out / ("represent_%03d.txt" % i))
        triple = zero_level_set(w)
        for p in triple.gamma:
            front_rows.append((t, *[float(c) for c in p]))
        overlays.append(("t=%.3g" % t, triple.gamma))
    coord_cols = ["x", "y"][: grid.dim]
    _write_csv(out / "fronts.csv", ["t"] + coord_cols, front_rows)
    if args.figures:
        from . import plots
        if grid.dim == 2:
            plots.save_fronts(overlays, out / "figures" / "fronts.png",
                              title="reconstructed fronts")
        else:
            xs = [row[0] for row in front_rows]
            ys = [row[1] for row in front_rows]
            plots.save_series(xs, {"front position": ys},
                              out / "figures" / "fronts.png",
                              xlabel="t", ylabel="x")
    return 0

def _cmd_bracket(cfg, args) -> int:
    out = _outdir(args)
    grid = cfgmod.build_grid(cfg)
    model = _build_model_any(cfg)
    if model is None:
        raise SpecError("bracket needs a [model] section")
    eps_raw = cfgmod._get(cfg, "solver", "eps", "auto")
    if eps_raw == "auto":
        if not isinstance(model, BistableModel):
            raise SpecError("bracket needs [solver] eps or [model] epsilon")
        eps = model.epsilon
    else:
        eps = float(eps_raw)
    t_end = cfgmod._get_float(cfg, "solver", "t_end", required=True)
    record_every = cfgmod._get_int(cfg, "solver", "record_every", 1)
    u0 = cfgmod.build_levelset_initial(cfg, grid)
    res = hj.bracket_run(u0, model, eps, grid=grid, t_end=t_end,
                         record_every=record_every)
    _write_csv(out / "gap.csv", ["t", "gap"], list(zip(res.times, res.gaps)))
    write_field(res.lower.snapshots[-1], out / "lower_final.txt")
    write_field(res.upper.snapshots[-1], out / "upper_final.txt")
    if args.figures:
        from . import plots
        guide = [2.0 * grid.h + 3.0 * eps] * len(res.times)
        plots.save_series(list(res.times), {"zero-set gap": list(res.gaps)},
                          out / "figures" / "gap.png", xlabel="t",
                          ylabel="Hausdorff gap", guide=("2h + 3*eps", guide))
    return 0

def _cmd_converge(cfg, args) -> int:
    out = _outdir(args)
    grid = cfgmod.build_grid(cfg)
    velocity = cfgmod.build_velocity(cfg)
    scaling = cfgmod._get(cfg, "model", "scaling", "one")
    ladder = cfgmod.build_ladder(cfg, velocity, grid, scaling)
    times = cfgmod.experiment_times(cfg)
    beta = cfgmod._get_float(cfg, "experiment", "beta", 0.1)
    tol = cfgmod._get_float(cfg, "experiment", "tol", 0.1)

    ref_kind = cfgmod._get(cfg, "experiment", "reference", "arrival")
    ref_grid = ladder.grid_for(min(ladder.epsilons))
    level = cfgmod.reference_level_values(cfg, ref_grid, velocity)
    u0_ref = ScalarField(ref_grid, level)
    if ref_kind == "arrival":
        reference = ArrivalReference(u0_ref, velocity)
    elif ref_kind == "hj":
        speed = hj.speed_field(velocity, ref_grid, "lower_envelope")
        dt = 0.9 * hj.first_order_cfl(ref_grid, float(speed.max()))
        sol = hj.run(hj.HJConfig(grid=ref_grid, dt=dt, t_end=max(times),
                                 velocity_mode="lower_envelope"), u0_ref, velocity)
        reference = lambda t: sol.front_at(t).gamma
    else:
        raise SpecError("[experiment] reference must be 'arrival' or 'hj'")

    report = run_convergence_study(ladder, cfgmod.initial_builder(cfg),
                                   reference, times, beta=beta, tol=tol,
                                   jobs=args.jobs)
    _write_json(out / "report.json", report.to_dict())
    rows = []
    for e in report.entries:
        for t, d in zip(report.times, e.distances):
            rows.append((e.eps, e.h, t, d))
    _write_csv(out / "hausdorff.csv", ["eps", "h", "t", "distance"], rows)
    rows = []
    for e in report.entries:
        for t, pf, mf in zip(report.times, e.plus_fractions, e.minus_fractions):
            rows.append((e.eps, t, pf, mf))
    _write_csv(out / "fractions.csv", ["eps", "t", "plus_frac", "minus_frac"], rows)
    rows = [(e.eps, e.generation.time, e.generation.scale, e.generation.ratio)
            for e in report.entries]
    _write_csv(out / "gen_time.csv", ["eps", "time", "scale", "ratio"], rows)
    if args.figures:
        from . import plots
        epsv = [e.eps for e in report.entries]
        series = {"t=%.3g" % t: [e.distances[j] for e in report.entries]
                  for j, t in enumerate(report.times)}
        plots.save_series(epsv, series, out / "figures" / "hausdorff.png",
                          xlabel="eps", ylabel="front distance",
                          logx=True, logy=True,
                          title=cfgmod.experiment_name(cfg, "converge"))
    print("hausdorff strictly decreasing per time:",
          list(report.hausdorff_strictly_decreasing))
    return 0

def _cmd_no_interior(cfg, args) -> int:
    out = _outdir(args)
    grid = cfgmod.build_grid(cfg)
    model = _build_model_any(cfg)
    if model is None:
        raise SpecError("no-interior needs a [model] section")
    u0 = cfgmod.build_levelset_initial(cfg, grid)
    times = cfgmod.experiment_times(cfg)
    neighbors = cfgmod._get_int(cfg, "solver", "neighbors", 8)
    tol_raw = cfgmod._get(cfg, "experiment", "band_tol", "auto")
    tol = None if tol_raw == "auto" else float(tol_raw)
    factor = cfgmod._get_float(cfg, "experiment", "factor", 4.0)
    entries = [(t, arrival_mod.represent_field(t, u0, model, neighbors=neighbors))
               for t in times]
    report = arrival_mod.no_interior_check(entries, tol=tol, factor=factor)
    _write_csv(out / "band.csv", ["t", "band_measure", "front_size", "ratio"],
               [(r.t, r.band_measure, r.front_size, r.ratio) for r in report.rows])
    _write_json(out / "report.json", {
        "verdict": report.verdict,
        "factor": report.factor,
        "rows": [{"t": r.t, "band_measure": r.band_measure,
                  "front_size": r.front_size, "ratio": r.ratio}
                 for r in report.rows],
    })
    if args.figures:
        from . import plots
        ts = [r.t for r in report.rows]
        plots.save_series(ts, {"band ratio": [r.ratio for r in report.rows]},
                          out / "figures" / "band_ratio.png", xlabel="t",
                          ylabel="band / (h * front size)",
                          guide=("factor", [factor] * len(ts)))
    print(report.verdict)
    return 0

def _cmd_validate(cfg, args) -> int:
    grid = cfgmod.build_grid(cfg)
    model = cfgmod.build_bistable(cfg)
    report = validate_model(model, grid)
    text = report.format()
    print(text)
    if args.out:
        out = _outdir(args)
        _atomic_write(out / "validation.txt", text + "\n")
    if not report.passed:
        print("validation failed", file=sys.stderr)
        return 2
    return 0

def _cmd_gen_time(cfg, args) -> int:
    out = _outdir(args)
    grid = cfgmod.build_grid(cfg)
    velocity = cfgmod.build_velocity(cfg)
    scaling = cfgmod._get(cfg, "model", "scaling", "one")
    ladder = cfgmod.build_ladder(cfg, velocity, grid, scaling)
    beta = cfgmod._get_float(cfg, "experiment", "beta", 0.1)
    build_initial = cfgmod.initial_builder(cfg)

    rows = []
    ratios = []
    for eps in ladder.epsilons:
        model = ladder.model_for(eps)
        g_grid = ladder.grid_for(eps)
        g = build_initial(model, g_grid)
        res = generation_time(model, g, beta)
        rows.append((eps, res.time, res.scale, res.ratio))
        if res.ratio is not None:
            ratios.append(res.ratio)
    _write_csv(out / "gen_time.csv", ["eps", "time", "scale", "ratio"], rows)
    spread = None
    if len(ratios) >= 2:
        spread = (max(ratios) - min(ratios)) / (sum(ratios) / len(ratios))
    _write_json(out / "report.json", {
        "scaling": scaling,
        "beta": beta,
        "rows": [{"eps": r[0], "time": r[1], "scale": r[2], "ratio": r[3]}
                 for r in rows],
        "ratio_spread": spread,
    })
    if args.figures:
        from . import plots
        plots.save_series([r[0] for r in rows],
                          {"time / scale": [r[3] for r in rows]},
                          out / "figures" / "gen_time.png", xlabel="eps",
                          ylabel="generation time / predicted scale", logx=True)
    print("generation-time ratios:", [r[3] for r in rows],
          "spread:", spread)
    return 0

_COMMANDS = {
    "rd-run": lambda cfg, args: _cmd_rd_run(cfg, args),
    "hj-run": lambda cfg, args: _cmd_hj_like(cfg, args, curvature=False),
    "mcf-run": lambda cfg, args: _cmd_hj_like(cfg, args, curvature=True),
    "arrival": lambda cfg, args: _cmd_arrival(cfg, args),
    "represent": lambda cfg, args: _cmd_represent(cfg, args),
    "bracket": lambda cfg, args: _cmd_bracket(cfg, args),
    "converge": lambda cfg, args: _cmd_converge(cfg, args),
    "no-interior": lambda cfg, args: _cmd_no_interior(cfg, args),
    "validate": lambda cfg, args: _cmd_validate(cfg, args),
    "gen-time": lambda cfg, args: _cmd_gen_time(cfg, args),
}

_NEEDS_OUT = {"rd-run", "hj-run", "mcf-run", "arrival", "represent", "bracket",
              "converge", "no-interior", "gen-time"}

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontlim",
        description="Front propagation limits: solvers, arrival times, "
                    "convergence reports.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", default="default" if name == "validate" else None,
                       required=name != "validate",
                       help="spec file path or bundled spec name")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--override", action="append", default=[],
                       metavar="SECTION.KEY=VALUE")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--figures", dest="figures", action="store_true",
                       default=True)
        p.add_argument("--no-figures", dest="figures", action="store_false")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "arrival":
            p.add_argument("--seed", default=None,
                           help="point:<csv> or region:<expr>")
            p.add_argument("--model", default=None,
                           help="model spec file overriding [model]/[grid]")
    return parser

def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in _NEEDS_OUT and not args.out:
            raise SpecError("%s needs --out <directory>" % args.command)
        cfg = cfgmod.load_spec(args.spec, args.override)
        return _COMMANDS[args.command](cfg, args)
    except SpecError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except NumericalError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3

if __name__ == "__main__":
    sys.exit(main())
