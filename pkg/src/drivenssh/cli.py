"""Command-line front end: ``drivenssh <verb> --config run.ini --out results/``.

Each verb writes one or more CSV files plus a ``.meta.json`` sidecar holding
the configuration echo and library version.  Output is deterministic: fixed
row order and 12 significant digits.

Exit codes: 0 success, 2 configuration or data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .exceptions import (
    ClassificationError,
    DataError,
    DrivenSSHError,
    GaugeError,
    GeometryError,
    InsufficientDataError,
    NotInPhaseError,
    NumericalError,
    SymmetryBrokenError,
    UnsupportedConfigurationError,
)
from .floquet import evolve, quasienergy_spectrum
from .models import DriveProtocol, domain_wall_sites
from .timecrystal import build_superposition, mode_projection, site_injection, subharmonic_analyze
from .topology import classify_phase, compute_invariants, quasienergy_gaps
from .waveguide import (
    WaveguideGeometry,
    fit_calibration,
    min_spacings,
    protocol_from_geometry,
    read_calibration_table,
)

EXIT_OK, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (NumericalError, SymmetryBrokenError, ClassificationError, np.linalg.LinAlgError)
DATA_ERRORS = (
    DataError, GeometryError, GaugeError, NotInPhaseError, InsufficientDataError,
    UnsupportedConfigurationError, ValueError, IndexError,
)


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else f"{float(value):.12g}"
    return str(value)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows, cfg: RunConfig, command: str) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    write_atomic(path, buf.getvalue())
    meta = {
        "command": command,
        "version": __version__,
        "config": cfg.raw,
        "overrides": cfg.overrides,
        "columns": list(header),
    }
    write_atomic(path.with_suffix(".meta.json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def steps_for(cfg: RunConfig, period: float) -> int:
    num = cfg.section("numerics")
    if "dt" in num:
        n = max(1, round(period / num["dt"]))
    else:
        n = num["steps_per_period"]
    if n < 2:
        raise DataError(f"step count per period must be >= 2, got {n}")
    return n


def dt_for(cfg: RunConfig, p: DriveProtocol, even: bool = False) -> float:
    n = steps_for(cfg, p.period)
    if even and n % 2:
        n += 1
    return p.period / n


def _sweep_protocols(cfg: RunConfig, axis: str, values, **fixed) -> list[DriveProtocol]:
    return [cfg.protocol(**{axis: v}, **fixed) for v in values]


def _pool_map(cfg: RunConfig, fn, items):
    workers = cfg.section("numerics")["workers"]
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _tol(cfg: RunConfig) -> float:
    return cfg.section("numerics")["unitarity_tol"]


def _spectrum_task(args):
    p, dt, tol = args
    s = quasienergy_spectrum(p, dt=dt, tol=tol)
    return s.quasienergies, s.edge_weight


def _gap_task(args):
    p, dt, n_k = args
    g = quasienergy_gaps(p.replace(n_sites=2, dw_cells=()), n_k, dt, refine=True)
    return g.gap0, g.gappi


def _invariant_task(args):
    p, dt, n_k = args
    try:
        inv = compute_invariants(p.replace(n_sites=2, dw_cells=()), n_k, dt, reduce=True)
    except SymmetryBrokenError as exc:
        return None, str(exc)
    try:
        label = classify_phase(inv).value
    except ClassificationError:
        label = "unclassified"
    return inv, label


def cmd_spectrum(cfg: RunConfig, out: Path) -> list[Path]:
    p = cfg.protocol()
    spec = quasienergy_spectrum(p, dt=dt_for(cfg, p), tol=_tol(cfg))
    rows = [
        (j, e, e * p.period, w)
        for j, (e, w) in enumerate(zip(spec.quasienergies, spec.edge_weight))
    ]
    written = [write_csv(out / "spectrum.csv", ("index", "quasienergy", "quasienergy_T", "edge_weight"), rows, cfg, "spectrum")]
    if cfg.has("sweep"):
        axis, values = cfg.sweep_axis("x")
        protocols = _sweep_protocols(cfg, axis, values)
        results = _pool_map(cfg, _spectrum_task, [(q, dt_for(cfg, q), _tol(cfg)) for q in protocols])
        band = [
            (x, j, e, e * q.period, w)
            for x, q, (eps, weight) in zip(values, protocols, results)
            for j, (e, w) in enumerate(zip(eps, weight))
        ]
        written.append(write_csv(out / "band_sweep.csv", (axis, "index", "quasienergy", "quasienergy_T", "edge_weight"), band, cfg, "spectrum"))
        if not p.dw_cells:
            n_k = cfg.section("numerics")["n_k"]
            gaps = _pool_map(cfg, _gap_task, [(q, dt_for(cfg, q, even=True), n_k) for q in protocols])
            written.append(write_csv(
                out / "gap_sweep.csv", (axis, "gap0", "gappi"),
                [(x, g0, gp) for x, (g0, gp) in zip(values, gaps)], cfg, "spectrum",
            ))
    return written


def cmd_dynamics(cfg: RunConfig, out: Path) -> list[Path]:
    p = cfg.protocol()
    dyn = cfg.section("dynamics")
    dt = dt_for(cfg, p)
    spec = quasienergy_spectrum(p, dt=dt, tol=_tol(cfg))
    dws = domain_wall_sites(p)
    sup = None
    if dyn["input"] == "site":
        psi = site_injection(p.n_sites, dyn["site"])
        default_sites = (dyn["site"],)
        try:
            loc = "left" if dyn["site"] <= p.n_sites // 2 else "right"
            sup = build_superposition(spec, loc, dw_sites=dws, gap_fraction=cfg.section("numerics")["gap_fraction"])
        except NotInPhaseError:
            sup = None
    elif dyn["input"] == "superposition":
        sup = build_superposition(
            spec, dyn["location"], dyn["alpha"], dyn["beta"], dws,
            cfg.section("numerics")["gap_fraction"], eigenstates=dyn["eigenstates"],
        )
        psi = sup.state
        default_sites = (sup.site + 1,)
    else:
        raise DataError(f"[dynamics] input must be 'site' or 'superposition', got {dyn['input']!r}")
    sites = tuple(dyn.get("analysis_sites") or default_sites)
    if any(not 1 <= s <= p.n_sites for s in sites):
        raise DataError(f"analysis sites {sites} outside [1, {p.n_sites}]")
    rec = evolve(p, psi, dyn["n_cycles"] * p.period, dt)
    drift = rec.norm_drift()
    if drift > 1e-8:
        raise NumericalError(f"norm drift {drift:.2e} exceeds 1e-8")
    report = subharmonic_analyze(rec, tuple(s - 1 for s in sites), p.period, tol=dyn["tol"])
    header = ("t",) + tuple(f"I_{j + 1}" for j in range(p.n_sites))
    rows = [(t, *row) for t, row in zip(rec.times, rec.intensity)]
    written = [write_csv(out / "intensity.csv", header, rows, cfg, "dynamics")]
    p0, ppi = mode_projection(sup, psi) if sup is not None else (math.nan, math.nan)
    summary = (
        " ".join(str(s) for s in sites), report.verdict, report.dominant_frequency, p.omega,
        report.weight_half, report.weight_full, report.ratio, report.r2T, report.peak,
        report.r2T / report.peak if report.peak else math.nan, report.modulation, p0, ppi, drift,
    )
    written.append(write_csv(
        out / "subharmonic.csv",
        ("sites", "verdict", "dominant_frequency", "omega", "weight_half", "weight_full", "ratio",
         "r2T", "peak", "r2T_relative", "modulation", "projection_zero", "projection_pi", "norm_drift"),
        [summary], cfg, "dynamics",
    ))
    return written


INVARIANT_HEADER = (
    "kappa0", "dkappa0", "dkappa1", "period", "period_ratio", "theta",
    "G0", "Gpi", "signed0", "signedpi", "residual0", "residualpi", "gap0", "gappi", "converged", "phase",
)


def _invariant_row(p: DriveProtocol, inv, label):
    return (
        p.kappa0, p.dkappa0, p.dkappa1, p.period, p.period_ratio, p.theta,
        inv.G0, inv.Gpi, inv.signed0, inv.signedpi, inv.residual0, inv.residualpi,
        inv.gap0, inv.gappi, inv.converged, label,
    )


def cmd_invariants(cfg: RunConfig, out: Path) -> list[Path]:
    p = cfg.protocol()
    n_k = cfg.section("numerics")["n_k"]
    inv = compute_invariants(p.replace(n_sites=2, dw_cells=()), n_k, dt_for(cfg, p, even=True), reduce=True)
    label = classify_phase(inv).value
    return [write_csv(out / "invariants.csv", INVARIANT_HEADER, [_invariant_row(p, inv, label)], cfg, "invariants")]


def cmd_phase_diagram(cfg: RunConfig, out: Path) -> list[Path]:
    x_axis, xs = cfg.sweep_axis("x")
    y_axis, ys = cfg.sweep_axis("y")
    if x_axis == y_axis:
        raise DataError("[sweep] x and y must be different axes")
    n_k = cfg.section("numerics")["n_k"]
    grid = [(x, y) for y in ys for x in xs]
    protocols = [cfg.protocol(**{x_axis: x, y_axis: y}) for x, y in grid]
    results = _pool_map(cfg, _invariant_task, [(q, dt_for(cfg, q, even=True), n_k) for q in protocols])
    rows = []
    for (x, y), (inv, label) in zip(grid, results):
        if inv is None:
            rows.append((x, y, "", "", math.nan, math.nan, math.nan, math.nan, False, "symmetry-broken"))
        else:
            rows.append((x, y, inv.G0, inv.Gpi, inv.residual0, inv.residualpi, inv.gap0, inv.gappi, inv.converged, label))
    header = (x_axis, y_axis, "G0", "Gpi", "residual0", "residualpi", "gap0", "gappi", "converged", "phase")
    return [write_csv(out / "phase_diagram.csv", header, rows, cfg, "phase-diagram")]


def cmd_calibrate(cfg: RunConfig, out: Path) -> list[Path]:
    cal_cfg = cfg.require("calibration")
    if "table" not in cal_cfg:
        raise DataError("[calibration] needs table")
    G, lc = read_calibration_table(cfg.resolve_path(cal_cfg["table"]))
    calib = fit_calibration(G, lc)
    written = [write_csv(
        out / "calibration.csv",
        ("a_per_mm", "b_mm", "residual", "G_min_mm", "G_max_mm", "lc_at_G_min_mm", "lc_at_G_max_mm"),
        [(calib.a, calib.b, calib.residual, G[0], G[-1], calib.coupling_length(G[0]), calib.coupling_length(G[-1]))],
        cfg, "calibrate",
    )]
    if cfg.has("geometry"):
        geo = cfg.section("geometry")
        missing = [k for k in ("g0", "g1", "A0", "Lambda") if k not in geo]
        if missing:
            raise DataError(f"[geometry] missing {', '.join(missing)}")
        geom = WaveguideGeometry(**geo)
        p, report = protocol_from_geometry(geom, calib, cal_cfg["n_z"], cal_cfg["extrapolate"])
        n_k = cfg.section("numerics")["n_k"]
        inv = compute_invariants(p.replace(n_sites=2), n_k, dt_for(cfg, p, even=True), reduce=True)
        label = classify_phase(inv).value
        g1, g2 = min_spacings(geom)
        written.append(write_csv(
            out / "protocol.csv",
            ("g0", "g1", "A0", "Lambda", "G_min1", "G_min2", "kappa0", "dkappa0", "dkappa1", "period",
             "coupling_length", "period_ratio", "truncation", "uniform_modulation", "G0", "Gpi", "phase"),
            [(geom.g0, geom.g1, geom.A0, geom.Lambda, g1, g2, p.kappa0, p.dkappa0, p.dkappa1, p.period,
              p.coupling_length, p.period_ratio, report.staggered, report.uniform, inv.G0, inv.Gpi, label)],
            cfg, "calibrate",
        ))
    return written


COMMANDS = {
    "spectrum": cmd_spectrum,
    "dynamics": cmd_dynamics,
    "invariants": cmd_invariants,
    "phase-diagram": cmd_phase_diagram,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drivenssh", description="Driven SSH Floquet chains")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI run configuration")
        sp.add_argument("--out", help="output directory (default: [output] directory or .)")
        sp.add_argument("--dt", type=float, help="time step; rounded to a whole number of steps per period")
        sp.add_argument("--nk", type=int, help="momentum grid size for invariants")
        sp.add_argument("--seed", type=int, help="reserved; recorded but unused")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        numerics = cfg.values.setdefault("numerics", {})
        if args.dt is not None:
            if not args.dt > 0:
                raise DataError(f"--dt must be positive, got {args.dt}")
            numerics["dt"] = args.dt
            cfg.overrides["dt"] = args.dt
        if args.nk is not None:
            if args.nk < 4:
                raise DataError(f"--nk must be >= 4, got {args.nk}")
            numerics["n_k"] = args.nk
            cfg.overrides["nk"] = args.nk
        if args.seed is not None:
            cfg.overrides["seed"] = args.seed
        out = Path(args.out or cfg.section("output").get("directory", "."))
        written = COMMANDS[args.command](cfg, out)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DrivenSSHError, *DATA_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
