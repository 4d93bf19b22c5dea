"""Command line front end: ``rblab {simulate,entropy,rate-study,diagnose}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .diagnostics import DiagnosticsRecord, oleinik_bound, record, tv_bound
from .entropy import EntropyRunConfig, run_entropy
from .grid import sample_datum
from .harness import StudyConfig, StudyError, emit_report, fmt, run_rate_study, write_csv
from .helmholtz import HelmholtzSolver, kernel_tail_mass
from .rb import RBRunConfig, run_rb

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_SINGULAR = 0, 1, 2, 3

log = logging.getLogger("rblab")


def write_manifest(out: Path, subcommand: str, cfg: RunConfig) -> None:
    text = (f"# rblab {__version__}\n"
            f"subcommand = {subcommand}\n"
            f"config_hash = {cfg.hash()}\n"
            f"defaults_applied = {','.join(cfg.defaults_applied)}\n"
            + cfg.resolved_text())
    (out / "manifest.txt").write_text(text)


def write_snapshots(path: Path, traj) -> None:
    x = traj.grid.x
    rows = ((t, xi, ui) for t, u in zip(traj.times, traj.states) for xi, ui in zip(x, u))
    write_csv(path, ("t", "x", "u"), rows)


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    g = cfg.grid()
    rcfg = RBRunConfig(cfg.flux_model, g, cfg.datum_obj, cfg.ell, cfg.t_end, cfg.visc,
                       cfg.cfl, list(cfg.snapshots), cfg.reconstruction, cfg.helmholtz)
    traj = run_rb(rcfg)
    write_snapshots(out / "snapshots.csv", traj)
    s = traj.series
    write_csv(out / "diagnostics.csv", DiagnosticsRecord.CSV_COLUMNS,
              zip(*(s[k] for k in DiagnosticsRecord.CSV_COLUMNS)))
    if traj.singular:
        log.error("singularity flagged: %s", traj.meta.get("singular_reason"))
        return EXIT_SINGULAR
    return EXIT_OK


def cmd_entropy(cfg: RunConfig, out: Path) -> int:
    g = cfg.grid()
    eps = g.dx if cfg.viscosity == "auto" else cfg.viscosity
    ecfg = EntropyRunConfig(cfg.flux_model, g, cfg.datum_obj, cfg.t_end, cfg.cfl, eps,
                            list(cfg.snapshots))
    traj = run_entropy(ecfg)
    write_snapshots(out / "snapshots.csv", traj)
    s = traj.series
    cols = ("t", "tv", "sup_fwd_slope", "mass")
    write_csv(out / "diagnostics.csv", cols, zip(*(s[k] for k in cols)))
    return EXIT_SINGULAR if traj.singular else EXIT_OK


def study_config(cfg: RunConfig) -> StudyConfig:
    lo, hi = cfg.domain
    return StudyConfig(
        flux=cfg.flux_model, datum=cfg.datum_obj, t_end=cfg.t_end,
        ell_list=cfg.ell_list, p_list=cfg.p_list, x_min=lo, x_max=hi,
        grid_policy=cfg.grid_policy, cells=cfg.cells,
        reference_refinement=cfg.reference_refinement, snapshot_dt=cfg.snapshot_dt,
        viscosity=cfg.visc, cfl=cfg.cfl, ref_cfl=cfg.ref_cfl,
        reconstruction=cfg.reconstruction, helmholtz=cfg.helmholtz,
        verify_reference=cfg.verify_reference)


def cmd_rate_study(cfg: RunConfig, out: Path) -> int:
    try:
        scfg = study_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        result = run_rate_study(scfg, workers=None)
    except StudyError as exc:
        log.error("%s", exc)
        if exc.result is not None and exc.result.members:
            persist_partial(exc.result, out)
        return EXIT_SINGULAR
    emit_report(result, out)
    for c in result.criteria:
        print(c.line())
    return EXIT_OK if result.passed else EXIT_FAILED


def persist_partial(result, out: Path) -> None:
    for mres in result.members:
        if mres.diagnostics:
            write_csv(out / f"diagnostics_ell{fmt(mres.ell)}.csv", DiagnosticsRecord.CSV_COLUMNS,
                      (rec.row() for rec in mres.diagnostics))
    (out / "verdict.txt").write_text("FAIL overall (study aborted: singular member run)\n")


def cmd_diagnose(cfg: RunConfig, out: Path) -> int:
    """Datum metadata, bound curves and the t = 0 diagnostics record."""
    g = cfg.grid()
    m, d = cfg.flux_model, cfg.datum_obj
    s = sample_datum(d, g)
    h = HelmholtzSolver(cfg.ell, g, cfg.helmholtz)
    rec = record(s.u, m, cfg.ell, h, 0.0)
    distance = min(-g.x_min, g.x_max) - d.support_radius
    lines = [
        f"flux = {m.name} c1 = {fmt(m.c1)} c2 = {fmt(m.c2)}",
        f"datum = {d.spec()}",
        f"M = {fmt(d.M)}",
        f"tv0 = {fmt(d.tv0)}",
        f"h1sq = {fmt(d.h1sq)}",
        f"support_radius = {fmt(d.support_radius)}",
        f"kernel_tail_mass = {fmt(kernel_tail_mass(cfg.ell, distance))}",
    ]
    lines += [f"{k} = {fmt(v)}" for k, v in zip(DiagnosticsRecord.CSV_COLUMNS, rec.row())]
    (out / "diagnose.txt").write_text("\n".join(lines) + "\n")
    ts = [0.0] + list(cfg.snapshots)
    write_csv(out / "bounds.csv", ("t", "oleinik", "tv_bound"),
              ((t, oleinik_bound(t, m.c1, d.M), tv_bound(t, m.c1, m.c2, d.M, d.tv0)) for t in ts))
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "entropy": cmd_entropy,
    "rate-study": cmd_rate_study,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rblab", description=__doc__)
    p.add_argument("--version", action="version", version=f"rblab {__version__}")
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("-c", "--config", help="key = value config file (defaults if omitted)")
    p.add_argument("-o", "--output", default="out", help="output directory")
    p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, args.set)
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out, args.subcommand, cfg)
        return COMMANDS[args.subcommand](cfg, out)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"rblab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
