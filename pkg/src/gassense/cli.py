"""Command-line entry point: ``gassense <command> [options]``.

Commands write comma-separated plot data under the output directory.
Exit codes: 0 success, 1 usage or configuration error, 2 numeric or
convergence error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, FormatError
from .gas import BAR

log = logging.getLogger("gassense")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _outdir(cfg) -> Path:
    out = cfg.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FormatError(f"cannot create output dir {out}: {exc}") from exc
    return out


def _resolve(cfg, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() or p.parent != Path(".") else cfg.output_dir / p


def _write_csv(path, header_comment, fields, rows):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {header_comment}\n")
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc}") from exc


def cmd_materials(cfg, args):
    from .casimir import matsubara_xi
    xi1 = float(matsubara_xi(cfg.sensor.temperature, 1))
    w_l = cfg.sensor.laser.omega
    rows = []
    for name, m in cfg.materials.items():
        rows.append({"material": name, "density_kg_m3": m.mass_density,
                     "eps_static": float(m.permittivity(0.0)),
                     "eps_xi1": float(m.permittivity(xi1)),
                     "eps_laser": float(m.permittivity(w_l)), "source": m.source})
    path = _outdir(cfg) / "materials.csv"
    _write_csv(path, f"config_hash={cfg.config_hash} xi1={xi1!r}", list(rows[0]), rows)
    for r in rows:
        print(f"{r['material']:>12s}  eps(0)={r['eps_static']:10.4g}  eps(i xi_1)={r['eps_xi1']:10.4g}")
    print(f"wrote {path}")
    if args.xi:
        grid = np.geomspace(args.xi[0], args.xi[1], int(args.xi[2]))
        curves = [{"xi_rad_s": float(x), **{n: float(m.permittivity(x)) for n, m in cfg.materials.items()}}
                  for x in grid]
        cpath = _outdir(cfg) / "permittivity_curves.csv"
        _write_csv(cpath, f"config_hash={cfg.config_hash}", list(curves[0]), curves)
        print(f"wrote {cpath}")
    return EXIT_OK


def cmd_sweep(cfg, args):
    from .trap import frequency_sweep
    if args.points < 1:
        raise ConfigurationError("--points must be >= 1 (empty pressure grid)")
    species = args.species or list(cfg.species.names)
    for s in species:
        if s not in cfg.species.names:
            raise ConfigurationError(f"unknown species '{s}'; valid: {', '.join(cfg.species.names)}")
    grid = np.linspace(0.0, args.pmax * BAR, args.points)
    model = cfg.sensor_model()
    rows = []
    for s in species:
        rows += frequency_sweep(model, s, grid, args.spheres)
    path = _resolve(cfg, args.file) if args.file else _outdir(cfg) / "sweep.csv"
    _outdir(cfg)
    _write_csv(path, f"config_hash={cfg.config_hash}", list(rows[0]), rows)
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_generate(cfg, args):
    from .dataset import generate_dataset, write_dataset, export_text
    spec = cfg.preset(args.preset, cfg.seed)
    model = cfg.sensor_model()
    ds = generate_dataset(spec, model, args.n, workers=args.workers,
                          config_hash=cfg.config_hash, extra_meta={"preset": args.preset})
    _outdir(cfg)
    path = _resolve(cfg, args.file or f"{args.preset}.gsd")
    write_dataset(ds, path)
    print(f"wrote {len(ds)} rows ({ds.metadata['skipped']} unstable draws resampled) to {path}")
    if args.text:
        tpath = path.with_suffix(".csv")
        export_text(ds, tpath)
        print(f"wrote {tpath}")
    return EXIT_OK


def _xy(ds, target):
    return ds.frequencies, ds.target(target) / BAR


def cmd_train(cfg, args):
    from .dataset import read_dataset, split_indices
    from .mlp import TrainSchedule, save_model, train, write_history
    ds = read_dataset(args.dataset)
    if ds.species != list(cfg.species.names):
        raise ConfigurationError(f"dataset species order {ds.species} differs from config")
    hidden = cfg.hidden
    if args.layers or args.units:
        hidden = (args.units or cfg.hidden[0],) * (args.layers or len(cfg.hidden))
    schedule = cfg.schedule
    if args.schedule:
        try:
            stages = tuple((float(a), int(b)) for a, b in
                           (s.split(":") for s in args.schedule.split(",")))
        except ValueError:
            raise ConfigurationError("--schedule must look like 1e-6:100,1e-7:100") from None
        schedule = TrainSchedule(stages, args.batch_size or schedule.batch_size)
    elif args.batch_size:
        schedule = TrainSchedule(schedule.stages, args.batch_size)
    n_val = args.n_validation or cfg.n_validation
    tr, va = split_indices(len(ds), n_val, cfg.seed)
    x, y = _xy(ds, args.target)
    target = args.target or ds.metadata["target"]

    def progress(epoch, a, b):
        if epoch % max(1, schedule.epochs // 20) == 0 or epoch == schedule.epochs - 1:
            log.info("epoch %d train %.4g val %.4g bar^2", epoch, a, b)

    res = train(x[tr], y[tr], x[va], y[va], hidden, schedule, cfg.seed, progress)
    _outdir(cfg)
    mpath = _resolve(cfg, args.model)
    meta = {"species": ds.species, "target": target, "seed": cfg.seed,
            "dataset_hash": ds.content_hash(), "config_hash": cfg.config_hash,
            "schedule": [list(s) for s in schedule.stages], "batch_size": schedule.batch_size,
            "n_validation": n_val, "validation_seed": cfg.seed}
    save_model(res.model, res.normalizer, mpath, meta)
    hpath = mpath.with_suffix(".history.csv")
    write_history(res.history, hpath, cfg.config_hash)
    print(f"wrote model {mpath} and loss history {hpath}")
    if res.aborted:
        print(f"training aborted: {res.message}", file=sys.stderr)
        return EXIT_NUMERIC
    if len(res.history):
        print(f"final train MSE {res.history[-1, 1]:.6g} bar^2, validation MSE {res.history[-1, 2]:.6g} bar^2")
    return EXIT_OK


def cmd_eval(cfg, args):
    from .dataset import read_dataset, split_indices
    from .mlp import evaluate, load_model, write_scatter
    ds = read_dataset(args.dataset)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model, norm, header = load_model(args.model)
    if header.get("species") and header["species"] != ds.species:
        raise ConfigurationError(
            f"model species order {header['species']} differs from dataset {ds.species}")
    x, y = _xy(ds, header.get("target"))
    if args.split == "validation":
        _, idx = split_indices(len(ds), header["n_validation"], header["validation_seed"])
        x, y = x[idx], y[idx]
    rep = evaluate(model, norm, x, y)
    _outdir(cfg)
    spath = _resolve(cfg, args.scatter) if args.scatter else _outdir(cfg) / "scatter.csv"
    write_scatter(rep["scatter"], spath, cfg.config_hash)
    rpath = spath.with_suffix(".report.txt")
    text = f"n={rep['n']}\nmse_bar2={rep['mse']!r}\ndelta_p_bar={rep['rmse']!r}\n"
    try:
        rpath.write_text(f"# config_hash={cfg.config_hash}\n" + text)
    except OSError as exc:
        raise FormatError(f"cannot write {rpath}: {exc}") from exc
    print(f"MSE = {rep['mse']:.6g} bar^2")
    print(f"delta_p = {rep['rmse']:.6g} bar")
    print(f"wrote {spath} and {rpath}")
    return EXIT_OK


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration (YAML)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gassense", description="Casimir-Polder gas sensor simulation and inversion")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("materials", parents=[common], help="tabulate material permittivities")
    m.add_argument("--xi", type=float, nargs=3, metavar=("MIN", "MAX", "N"),
                   help="also write eps(i xi) curves on a log grid")
    m.set_defaults(func=cmd_materials)

    s = sub.add_parser("sweep", parents=[common], help="single-gas frequency sweep")
    s.add_argument("--species", nargs="+", help="gases to sweep (default: all)")
    s.add_argument("--spheres", nargs="+", help="sphere materials (default: all)")
    s.add_argument("--pmax", type=float, default=0.2, help="max pressure in bar")
    s.add_argument("--points", type=int, default=41)
    s.add_argument("--file", help="output file name")
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("generate", parents=[common], help="generate a labelled dataset")
    g.add_argument("--preset", default="set1")
    g.add_argument("-n", "--n", type=int, default=1000)
    g.add_argument("--file", help="dataset file name (default <preset>.gsd)")
    g.add_argument("--text", action="store_true", help="also write a CSV export")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", parents=[common], help="train the inverter")
    t.add_argument("--dataset", required=True, type=Path)
    t.add_argument("--model", default="model.gsm")
    t.add_argument("--target", help="species to regress (default: dataset target)")
    t.add_argument("--layers", type=int)
    t.add_argument("--units", type=int)
    t.add_argument("--schedule", help="comma list of rate:epochs")
    t.add_argument("--batch-size", type=int)
    t.add_argument("--n-validation", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="evaluate a trained inverter")
    e.add_argument("--model", required=True, type=Path)
    e.add_argument("--dataset", required=True, type=Path)
    e.add_argument("--split", choices=["validation", "all"], default="validation")
    e.add_argument("--scatter", help="scatter output file name")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    from .config import load_config
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
        return args.func(cfg, args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
