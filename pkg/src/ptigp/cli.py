"""Command-line driver.

Usage::

    ptigp <command> [config.ini] [--threads N] [--section.key=value ...]

Commands: check, phases, igp-scan, critical, oracle, evolve.  Exit codes are
0 on success, 1 when ``check`` finds a residual out of tolerance, 2 on a
physics-domain error and 3 on a usage or configuration error.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .errors import ConfigError, PTError
from .gaugemap import proper_map_along, properness_residual
from .models import get_model
from .paths import latitude_loop, polyline
from .phases import evolve_report, evolve_states, loop_phases, wrap_angle
from .ptsystem import check_pseudo_hermiticity, spectrum_along
from .thermal import critical_scan, default_threads, scan_grid

SCHEMA_VERSION = 1

COLUMNS = {
    "phases": ["level", "re_theta1", "im_theta1", "theta2", "theta_berry", "branch",
               "residual_berry", "residual_split"],
    "igp-scan": ["theta", "beta", "theta_g", "amplitude_abs", "regime", "eff_weight_ratio"],
    "critical": ["theta", "beta", "cos_theta", "jump", "dip"],
    "oracle": ["ramp_factor", "re_phase", "im_phase", "re_reference", "error", "leaked_population",
               "breakdown"],
    "evolve": ["t", "re_phase", "im_phase", "leaked_population"],
}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return str(v)


def render(command, rows, fmt):
    """Serialize rows (lists in column order) as CSV or JSON text."""
    cols = COLUMNS[command]
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command, "columns": cols,
               "rows": [dict(zip(cols, map(_jsonable, r))) for r in rows]}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text, path, stdout):
    if path in ("", "-"):
        stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _system(cfg):
    return get_model(cfg.model_name, **cfg.model_params)


def _path(cfg, theta=None, samples=None):
    samples = samples or cfg.samples
    if cfg.path_type == "latitude":
        return latitude_loop(cfg.theta if theta is None else theta, samples, tau=cfg.tau)
    periods = (None, 2 * np.pi) if len(cfg.vertices[0]) == 2 else None
    return polyline(cfg.vertices, samples, tau=cfg.tau, periods=periods)


def cmd_check(cfg, out):
    system = _system(cfg)
    path = _path(cfg)
    tol = cfg.tolerances
    idx = np.unique(np.linspace(0, len(path) - 1, 64).astype(int))
    rows = []
    sp = spectrum_along(system, path)
    ph = max(check_pseudo_hermiticity(system, path.points[k]) for k in idx)
    rows.append(("pseudo_hermiticity", ph, tol["pseudo_hermiticity"]))
    w = system.metric_at(path.points)
    rows.append(("biorthonormality", max(sp[k].biorthonormality_residual() for k in idx), tol["biorthonormality"]))
    rows.append(("completeness", max(sp[k].completeness_residual() for k in idx), tol["completeness"]))
    rows.append(("metric_pairing", max(sp[k].metric_residual(w[k]) for k in idx), tol["metric_pairing"]))
    pm = proper_map_along(system, path, tol=tol["properness"])
    h0 = pm.partners(system)
    herm = np.linalg.norm(h0 - np.conj(np.swapaxes(h0, -1, -2)), axis=(-2, -1)) / \
        np.linalg.norm(system.hamiltonian_at(path.points), axis=(-2, -1))
    rows.append(("partner_hermiticity", float(herm.max()), tol["partner_hermiticity"]))
    rows.append(("properness", properness_residual(pm), tol["properness"]))
    if path.closed:
        reps = loop_phases(system, path, proper=pm, spectra=sp)
        rows.append(("berry", max(r.residual_berry for r in reps), tol["berry"]))
    ok = True
    for name, value, limit in rows:
        passed = value <= limit
        ok &= passed
        out.write(f"{name:<22s} {value:.3e}  (tol {limit:.1e})  {'PASS' if passed else 'FAIL'}\n")
    out.write("all residuals within tolerance\n" if ok else "residual check FAILED\n")
    return 0 if ok else 1


def cmd_phases(cfg, out):
    system = _system(cfg)
    path = _path(cfg)
    rows = []
    for r in loop_phases(system, path):
        rows.append([r.level, r.theta1.real, r.theta1.imag, r.theta2, r.theta_berry, r.branch,
                     r.residual_berry, r.residual_split])
    _emit(render("phases", rows, cfg.output_format), cfg.output_path, out)
    return 0


def _family(cfg):
    system = _system(cfg)
    samples = cfg.scan["loop_samples"]
    return system, (lambda theta: latitude_loop(theta, samples))


def _critical_file(cfg):
    if cfg.critical_path:
        return cfg.critical_path
    if cfg.output_path in ("", "-"):
        return ""
    p = Path(cfg.output_path)
    return str(p.with_name(p.stem + "_critical" + p.suffix))


def _critical_rows(points):
    return [[c.param, c.beta, np.cos(c.param), c.jump, c.dip] for c in points]


def cmd_igp_scan(cfg, out, threads):
    system, family = _family(cfg)
    thetas, betas = cfg.theta_grid(), cfg.beta_grid()
    grid = scan_grid(system, family, betas, thetas, threads)
    tg, ratio, reg = grid.theta_g, grid.eff_weight_ratio, grid.regimes()
    rows = []
    for i, th in enumerate(thetas):
        for j, b in enumerate(betas):
            rows.append([th, b, tg[i, j], abs(grid.amplitude[i, j]), reg[i, j].value, ratio[i, j]])
    _emit(render("igp-scan", rows, cfg.output_format), cfg.output_path, out)
    target = _critical_file(cfg)
    if target:
        if min(len(thetas), len(betas)) >= 100:
            points = critical_scan(system, family, betas, thetas, threads, tol=cfg.critical_tol, grid=grid)
        else:
            points = []
            sys.stderr.write("grid below 100 points per axis: critical-point detection skipped\n")
        _emit(render("critical", _critical_rows(points), cfg.output_format), target, out)
    return 0


def cmd_critical(cfg, out, threads):
    system, family = _family(cfg)
    points = critical_scan(system, family, cfg.beta_grid(), cfg.theta_grid(), threads, tol=cfg.critical_tol)
    _emit(render("critical", _critical_rows(points), cfg.output_format), cfg.output_path, out)
    return 0


def cmd_oracle(cfg, out):
    system = _system(cfg)
    path = _path(cfg, samples=cfg.oracle["samples"])
    sp = spectrum_along(system, path)
    n = cfg.oracle["level"]
    rows = []
    for r in cfg.oracle["ramp_factors"]:
        rep = evolve_report(system, path, n, r, spectra=sp, strict=False)
        rows.append([r, rep.total_phase.real, rep.total_phase.imag, rep.reference.real, rep.error,
                     rep.leaked_population, rep.leaked_population > 0.01])
    _emit(render("oracle", rows, cfg.output_format), cfg.output_path, out)
    return 0


def cmd_evolve(cfg, out):
    system = _system(cfg)
    path = _path(cfg, samples=cfg.oracle["samples"])
    sp = spectrum_along(system, path)
    n = cfg.oracle["level"]
    ramp = cfg.oracle["ramp_factor"]
    states = evolve_states(system, path, sp.right[0, n], ramp)
    amps = np.einsum("kni,ki->kn", np.conj(sp.left), states)
    phase = -1j * np.log(amps[:, n])
    leaked = np.sum(np.abs(amps) ** 2, axis=1) - np.abs(amps[:, n]) ** 2
    t = ramp * (path.times - path.times[0])
    rows = [[t[k], float(wrap_angle(phase[k].real)), phase[k].imag, leaked[k]] for k in range(len(t))]
    _emit(render("evolve", rows, cfg.output_format), cfg.output_path, out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ptigp", description="Geometric phases of PT-symmetric systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("check", "residual checks of the model along the configured path"),
        ("phases", "loop phases per level"),
        ("igp-scan", "IGP over the (theta, beta) grid"),
        ("critical", "critical points of the IGP"),
        ("oracle", "adiabatic evolution against the loop phases"),
        ("evolve", "time series of one slowed-down evolution"),
    ]:
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", nargs="?", help="INI configuration file")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: PTIGP_THREADS or CPU count)")
    return p


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # argparse treats tokens containing spaces as positionals, so pull the
    # ``--section.key[=value]`` overrides out before it sees them
    extra, rest = [], []
    it = iter(argv)
    for tok in it:
        if tok.startswith("--") and "." in tok.split("=", 1)[0]:
            extra.append(tok)
            value = None if "=" in tok else next(it, None)
            if value is not None:
                extra.append(value)
        else:
            rest.append(tok)
    try:
        args, unknown = parser.parse_known_args(rest)
    except SystemExit as exc:
        return 3 if exc.code not in (0, None) else 0
    extra = unknown + extra
    try:
        cfg = cfgmod.load(args.config, cfgmod.parse_overrides(extra))
        threads = args.threads if args.threads is not None else default_threads()
        if threads < 1:
            raise ConfigError("--threads must be positive")
        if args.command == "check":
            return cmd_check(cfg, stdout)
        if args.command == "phases":
            return cmd_phases(cfg, stdout)
        if args.command == "igp-scan":
            return cmd_igp_scan(cfg, stdout, threads)
        if args.command == "critical":
            return cmd_critical(cfg, stdout, threads)
        if args.command == "oracle":
            return cmd_oracle(cfg, stdout)
        return cmd_evolve(cfg, stdout)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return exc.exit_code
    except PTError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    except (KeyError, ValueError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
