"""Command-line driver: run simulations, convergence sweeps, phase-field dumps.

Exit codes: 0 success, 2 configuration errors, 3 runtime blow-up (the last
good state is still written), 4 I/O errors.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np
import torch
import yaml

from . import __version__
from .analysis import convergence_sweep, write_sweep_csv
from .config import ConfigError, RunConfig, parse_config, resolved_config_dict
from .geometry import enlarged_domain, rasterize
from .grid import Field2, Grid2
from .models import (
    FentonKarmaParams,
    ReactionModel,
    allen_cahn,
    allen_cahn_ic,
    fenton_karma,
    fenton_karma_rest_state,
    heat_with_source,
)
from .phasefield import LOG_EPS, smooth
from .snapshots import read_snapshot, write_field_csv, write_pgm, write_section_csv, write_snapshot
from .spectral import SpectralEngine
from .stepper import BlowUpError, SolverState, SplitStepper, default_dt

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4


def _even_ceil(value: float) -> int:
    n = int(math.ceil(value - 1e-9))
    return n + (n % 2)


def build_grid_and_chi(cfg: RunConfig) -> tuple[Grid2, Field2]:
    """Resolve the computational grid and rasterize the domain indicator."""
    shape = cfg.shape_object()
    if shape is not None:
        if cfg.n is not None:
            n = cfg.n
        else:
            box = shape.bbox()
            if box is None or not all(math.isfinite(v) for v in box):
                raise ConfigError("geometry: shape must have a finite, nonempty bounding box")
            side = max(box[1] - box[0], box[3] - box[2]) + 20.0 * cfg.xi
            n = _even_ceil(side * cfg.eta / cfg.xi - 0.5)
        if n < 8:
            raise ConfigError(f"resolved grid resolution {n} is too small")
        grid = enlarged_domain(shape, cfg.xi, n)
        return grid, rasterize(shape, grid)
    # mask geometry: the mask's physical extent is the computational rectangle
    ex = cfg.mask.extent()
    width, height = ex[1] - ex[0], ex[3] - ex[2]
    if cfg.n is not None:
        nx = cfg.n
        dx = width / nx
    else:
        dx = cfg.xi / cfg.eta
        nx = _even_ceil(width / dx)
    ny = _even_ceil(height / dx)
    if nx < 8 or ny < 8:
        raise ConfigError(f"resolved mask grid {nx}x{ny} is too small")
    cx, cy = 0.5 * (ex[0] + ex[1]), 0.5 * (ex[2] + ex[3])
    grid = Grid2(nx=nx, ny=ny, lx=nx * dx, ly=ny * dx, x0=cx - nx * dx / 2, y0=cy - ny * dx / 2)
    return grid, rasterize(cfg.mask, grid)


def build_model(cfg: RunConfig) -> ReactionModel:
    if cfg.model_kind == "heat":
        cx, cy = cfg.model_params["center"]
        return heat_with_source(cfg.model_params["d"], cx, cy)
    if cfg.model_kind == "allen_cahn":
        return allen_cahn(cfg.model_params["eps"])
    try:
        params = FentonKarmaParams(**cfg.model_params)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    return fenton_karma(params)


def build_initial_fields(cfg: RunConfig, model: ReactionModel, grid: Grid2) -> list[Field2]:
    """Initial component fields; the initial-condition spec applies to u."""
    if cfg.model_kind == "fenton_karma":
        fields = list(fenton_karma_rest_state(grid))
    else:
        fields = [Field2.zeros(grid)]
    spec = cfg.initial
    kind = spec["kind"]
    if kind == "zero":
        pass
    elif kind == "constant":
        fields[0] = Field2.full(grid, spec["value"])
    elif kind == "preset":
        fields[0] = allen_cahn_ic(grid)
    elif kind == "stimulus":
        x0, x1, y0, y1 = spec["rect"]
        region = (grid.xg >= x0) & (grid.xg <= x1) & (grid.yg >= y0) & (grid.yg <= y1)
        fields[0] = Field2(grid, np.where(region, float(spec["value"]), 0.0))
    else:  # file
        loaded, _, _ = read_snapshot(spec["path"])
        if loaded.grid != grid:
            raise ConfigError(
                f"initial.path: snapshot grid {loaded.grid.nx}x{loaded.grid.ny} does not match "
                f"the run grid {grid.nx}x{grid.ny}"
            )
        fields[0] = loaded
    return fields


class _SnapshotWriter:
    def __init__(self, outdir: Path, names: tuple[str, ...], heatmaps: bool, csv_dump: bool):
        self.outdir = outdir
        self.names = names
        self.heatmaps = heatmaps
        self.csv_dump = csv_dump

    def __call__(self, state: SolverState) -> None:
        for name, f in zip(self.names, state.fields):
            stem = self.outdir / f"{name}_{state.step_count:08d}"
            write_snapshot(stem.with_suffix(".ssbf"), f, state.t, name)
            if self.heatmaps:
                write_pgm(stem.with_suffix(".pgm"), f)
            if self.csv_dump:
                write_field_csv(stem.with_suffix(".csv"), f)


def _versions() -> dict:
    return {
        "ssb": __version__,
        "python": sys.version.split()[0],
        "numpy": str(np.__version__),
        "torch": str(torch.__version__),
    }


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config)
    if args.dt is not None:
        if args.dt <= 0:
            raise ConfigError("--dt must be positive")
        cfg.dt = args.dt
    if args.seed_output_dir is not None:
        cfg.outdir = args.seed_output_dir
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args)
    grid, chi = build_grid_and_chi(cfg)
    engine = SpectralEngine(grid)
    try:
        pf = smooth(chi, cfg.xi, engine)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    model = build_model(cfg)
    dt = cfg.dt if cfg.dt is not None else default_dt(model, grid)
    stepper = SplitStepper(dt, model, pf, engine)
    state = stepper.initial_state(build_initial_fields(cfg, model, grid))

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = resolved_config_dict(cfg, _resolution_entry(cfg, grid), dt)
    (outdir / "resolved_config.yaml").write_text(yaml.safe_dump(resolved, sort_keys=True))
    observer = _SnapshotWriter(outdir, model.names, cfg.heatmaps, cfg.csv)

    if not args.quiet:
        print(
            f"run: grid {grid.nx}x{grid.ny}, dx={grid.dx:.6g}, xi={cfg.xi}, dt={dt:.6g}, "
            f"t_end={cfg.t_end}, model={cfg.model_kind}",
            file=sys.stderr,
        )
    import hashlib as _h
    import os as _os
    if _os.environ.get("SSB_TRACE_IN"):
        _hh = lambda a: _h.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:12]
        _mult = engine.propagator_multiplier(model.diffusivities[0], dt / 2).numpy()
        _src = model.rates_on(grid)((state.fields[0].data,), 0.0)[0]
        with open(_os.environ["SSB_TRACE_IN"], "a") as _fh:
            _fh.write(
                f"chi {_hh(chi.data)} phi {_hh(pf.phi.data)} glx {_hh(pf.glogx.data)} "
                f"gly {_hh(pf.glogy.data)} src {_hh(_src)} mult {_hh(_mult)} "
                f"k2 {_hh(engine._k2.numpy())} u0 {_hh(state.fields[0].data)}\n"
            )
    t_start = time.perf_counter()
    try:
        state = stepper.run(state, cfg.t_end, snapshot_every=cfg.snapshot_every, observer=observer)
    except BlowUpError as exc:
        observer(exc.last_state)
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    wall = time.perf_counter() - t_start

    manifest = {"config": resolved, "versions": _versions(), "wall_seconds": round(wall, 3)}
    (outdir / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=True))
    if not args.quiet:
        print(f"done: {state.step_count} steps to t={state.t:.6g} in {wall:.1f}s -> {outdir}", file=sys.stderr)
    return EXIT_OK


def _resolution_entry(cfg: RunConfig, grid: Grid2) -> dict:
    # masks re-derive their rectangular grid from the original key; shapes pin n
    if cfg.geometry_source == "mask":
        return {"n": cfg.n} if cfg.n is not None else {"eta": cfg.eta}
    return {"n": grid.nx}


def cmd_phasefield(args) -> int:
    cfg = _load_config(args)
    grid, chi = build_grid_and_chi(cfg)
    engine = SpectralEngine(grid)
    try:
        pf = smooth(chi, cfg.xi, engine)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    glog_mag = Field2(grid, np.hypot(pf.glogx.data, pf.glogy.data))
    write_snapshot(outdir / "phi.ssbf", pf.phi, 0.0, "phi")
    write_snapshot(outdir / "glog_mag.ssbf", glog_mag, 0.0, "glog_mag")
    if cfg.heatmaps:
        write_pgm(outdir / "phi.pgm", pf.phi, lo=0.0, hi=1.0)
        write_pgm(outdir / "glog_mag.pgm", glog_mag)
    if args.section_y is not None:
        j = int(np.argmin(np.abs(grid.y - args.section_y)))
        write_section_csv(
            outdir / "section.csv",
            grid.x,
            {"chi": chi.data[j], "phi": pf.phi.data[j]},
        )
    if not args.quiet:
        print(
            f"phasefield: grid {grid.nx}x{grid.ny}, xi={cfg.xi}, "
            f"log floor eps={LOG_EPS:.3g} -> {outdir}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_converge(args) -> int:
    cells = convergence_sweep(args.preset, args.xi, args.eta, jobs=args.jobs)
    write_sweep_csv(cells, args.output)
    failures = [c for c in cells if c.error]
    if not args.quiet:
        for c in cells:
            status = f"E={c.E:.4g} e={c.e:.4g}" if not c.error else f"FAILED: {c.error}"
            print(f"  xi={c.xi} eta={c.eta} N={c.n}: {status} ({c.wall_seconds:.1f}s)", file=sys.stderr)
        print(f"wrote {args.output} ({len(cells)} rows, {len(failures)} failed)", file=sys.stderr)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dt", type=float, default=None, help="override the time step")
    common.add_argument(
        "--seed-output-dir",
        metavar="DIR",
        default=None,
        help="override the output directory from the config",
    )
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="ssb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="run a simulation from a config file")
    p_run.add_argument("config", help="YAML run configuration")
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("converge", parents=[common], help="run a convergence sweep")
    p_conv.add_argument("preset", choices=("annulus", "quarter_annulus"))
    p_conv.add_argument("--xi", type=float, nargs="+", required=True, help="interface widths")
    p_conv.add_argument("--eta", type=float, nargs="+", required=True, help="interface resolutions xi/dx")
    p_conv.add_argument("-o", "--output", required=True, help="output CSV path")
    p_conv.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    p_conv.set_defaults(func=cmd_converge)

    p_pf = sub.add_parser("phasefield", parents=[common], help="dump phi and |grad log(phi+eps)| without running a PDE")
    p_pf.add_argument("config", help="YAML run configuration (geometry + domain are used)")
    p_pf.add_argument("-o", "--output", required=True, help="output directory")
    p_pf.add_argument("--section-y", type=float, default=None, help="also dump a 1D section (x, chi, phi) near this y")
    p_pf.set_defaults(func=cmd_phasefield)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
