"""Command line entry point: ``fujita-lab {verify-exact,sweep,capacity-check,envelope}``.

Every subcommand reads a flat ``key=value`` config, writes a CSV into the
output directory and appends one line to ``catalog.csv`` there.  Floats in
data rows are printed with 17 significant digits and no row carries a
wall-clock value, so identical configs give byte-identical CSVs.

CSV schemas
-----------
verify-exact   residuals.csv: n, alpha_hat, q, t, r, u, residual
sweep          sweep.csv: q, amplitude, outcome, t_star, final_max, steps, sandwich, config_hash
capacity-check capacity.csv: R, T, J_time, J_space_d, J_space_qnu, lhs, rhs, ratio,
                             slope_J_time, slope_J_space_d, slope_J_space_qnu
envelope       envelope.csv: R, envelope, bound, satisfied
catalog        catalog.csv: timestamp, subcommand, config_hash, output, summary
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import fcntl
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import capacity as cap
from .coefficients import check_growth
from .config import (CAPACITY_KEYS, ENVELOPE_KEYS, EXACT_KEYS, SWEEP_KEYS, Config,
                     field_from_config)
from .errors import ConfigurationError, DomainError, FujitaLabError, SolverAbort
from .exact import (RESIDUAL_TOL, admissible_params, critical_exponent, eval_u, example_field,
                    residual_example1, residual_ineq4, sample_points)
from .grid import GridFunction, RadialGrid
from .solver import InitialData, SolverConfig, dichotomy_sweep

SCHEMAS = {
    "residuals": ["n", "alpha_hat", "q", "t", "r", "u", "residual"],
    "sweep": ["q", "amplitude", "outcome", "t_star", "final_max", "steps", "sandwich", "config_hash"],
    "capacity": ["R", "T", "J_time", "J_space_d", "J_space_qnu", "lhs", "rhs", "ratio",
                 "slope_J_time", "slope_J_space_d", "slope_J_space_qnu"],
    "envelope": ["R", "envelope", "bound", "satisfied"],
    "catalog": ["timestamp", "subcommand", "config_hash", "output", "summary"],
}
TEXT_COLUMNS = {"outcome", "sandwich", "config_hash", "satisfied", "timestamp", "subcommand",
                "output", "summary"}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating, Fraction)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: Path, schema: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCHEMAS[schema])
        for row in rows:
            w.writerow([fmt(v) for v in row])


def check_csv(path, schema: str) -> int:
    """Validate header and cell types of a CSV against a documented schema; returns the row count."""
    cols = SCHEMAS[schema]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != cols:
            raise ValueError(f"{path}: header {header} != {cols}")
        count = 0
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(cols):
                raise ValueError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
            for name, cell in zip(cols, row):
                if name not in TEXT_COLUMNS and cell != "":
                    float(cell)
            count += 1
    return count


def append_catalog(out: Path, subcommand: str, config_hash: str, output: Path, summary: str) -> None:
    path = out / "catalog.csv"
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(SCHEMAS["catalog"])
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        w.writerow([stamp, subcommand, config_hash, str(output), summary])


# -- subcommands ------------------------------------------------------------


def _exact_key(cfg: Config, key: str):
    """``exact.key`` with the bare ``key`` accepted as shorthand."""
    for name in (f"exact.{key}", key):
        if name in cfg:
            return name
    return None


def cmd_verify_exact(cfg: Config, out: Path, seed: int, jobs: int = 1):
    cfg.require_known(EXACT_KEYS | {"n", "alpha_hat", "q", "gamma", "kappa"})
    n_key, a_key, q_key = (_exact_key(cfg, k) for k in ("n", "alpha_hat", "q"))
    if q_key is None:
        raise ConfigurationError("missing config key: exact.q")
    ns = [int(v) for v in cfg.exact_numbers(n_key)] if n_key else [1]
    alphas = cfg.exact_numbers(a_key) if a_key else [Fraction(2)]
    qs = cfg.exact_numbers(q_key)
    g_key, k_key = _exact_key(cfg, "gamma"), _exact_key(cfg, "kappa")
    gamma = cfg.number(g_key) if g_key else None
    kappa = cfg.number(k_key) if k_key else None
    samples = cfg.integer("exact.samples", 10_000)
    t_max = cfg.number("exact.t_max", 10.0)
    r_max = cfg.number("exact.r_max", 20.0)
    rng = np.random.default_rng(seed)
    rows, lines, ok = [], [], True
    for n in ns:
        for q in qs:
            if q <= 1:
                # u = exp(t) with a = 0
                t, r = sample_points(n, samples, t_max, r_max, rng)
                res = residual_example1(float(q), t)
                good = bool(np.all(res >= -RESIDUAL_TOL * np.exp(t)))
                ok &= good
                rows.extend((n, None, q, ti, ri, math.exp(ti), re) for ti, ri, re in zip(t, r, res))
                lines.append(f"n={n} q={float(q):g}: exponential solution, min residual "
                             f"{res.min():.3e} -> {'pass' if good else 'FAIL'}")
                continue
            for a in alphas:
                box = admissible_params(n, a, q)
                if box is None:
                    raise DomainError(
                        f"subcritical: no admissible parameters (q <= 1+alpha_hat/n) "
                        f"for n={n}, alpha_hat={float(a):g}, q={float(q):g}")
                p = box.params(gamma, kappa)
                t, r = sample_points(n, samples, t_max, r_max, rng)
                res = residual_ineq4(p, example_field(p), t, r)
                u = eval_u(p, t, r)
                good = bool(res.min() >= -RESIDUAL_TOL)
                ok &= good
                rows.extend((n, p.alpha_hat, p.q, ti, ri, ui, re)
                            for ti, ri, ui, re in zip(t, r, u, res))
                lines.append(f"n={n} alpha_hat={p.alpha_hat:g} q={p.q:g} gamma={p.gamma:.6g} "
                             f"kappa={p.kappa:.6g}: min residual {res.min():.3e} "
                             f"-> {'pass' if good else 'FAIL'}")
    path = out / "residuals.csv"
    write_csv(path, "residuals", rows)
    return ok, lines, path


def solver_config_from(cfg: Config) -> SolverConfig:
    fld = field_from_config(cfg)
    q_default = cfg.numbers("sweep.q")[0] if "sweep.q" in cfg else 2.0
    q = cfg.number("q", q_default)
    kind = cfg.text("init.kind", "gaussian")
    params = None
    if kind == "exact":
        box = admissible_params(fld.n, fld.alpha, q)
        if box is None:
            raise ConfigurationError("config key init.kind: exact data needs a supercritical q")
        params = box.params()
    init = InitialData(kind, cfg.number("init.amplitude", 1.0), cfg.number("init.width", 1.0), params)
    defaults = SolverConfig(fld, q)
    return SolverConfig(
        fld, q,
        r_max=cfg.number("grid.rmax", defaults.r_max),
        nodes=cfg.integer("grid.nodes", defaults.nodes),
        stretch=cfg.number("grid.stretch", defaults.stretch),
        t_end=cfg.number("run.t_end", defaults.t_end),
        init=init,
        bc=cfg.text("run.bc", defaults.bc),
        integrator=cfg.text("run.integrator", defaults.integrator),
        cfl=cfg.number("dt.cfl", defaults.cfl),
        dt_max=cfg.number("dt.max", defaults.dt_max),
        react_fraction=cfg.number("dt.react", defaults.react_fraction),
        threshold=cfg.number("blowup.threshold", defaults.threshold),
        reaction=cfg.flag("run.reaction", True),
        frames=cfg.integer("run.frames", defaults.frames),
    )


def cmd_sweep(cfg: Config, out: Path, seed: int, jobs: int = 1):
    cfg.require_known(SWEEP_KEYS)
    base = solver_config_from(cfg)
    q_list = cfg.numbers("sweep.q") if "sweep.q" in cfg else [base.q]
    amps = cfg.numbers("sweep.amplitudes") if "sweep.amplitudes" in cfg else [base.init.amplitude]
    rows = dichotomy_sweep(base, q_list, amps, jobs=jobs)
    path = out / "sweep.csv"
    write_csv(path, "sweep", [(r.q, r.amplitude, r.outcome, r.t_star, r.final_max, r.steps,
                               r.sandwich, r.config_hash) for r in rows])
    q_crit = critical_exponent(base.field.n, base.field.alpha)
    lines = [f"critical exponent 1+alpha/n = {q_crit:g}"]
    for r in rows:
        ts = "" if r.t_star is None else f" t*={r.t_star:.6g}"
        lines.append(f"q={r.q:g} amplitude={r.amplitude:g}: {r.outcome}{ts} max={r.final_max:.4g} "
                     f"sandwich={r.sandwich}" + (f" [{r.warning}]" if r.warning else ""))
    ok = all(r.sandwich != "fail" for r in rows)
    return ok, lines, path


def cmd_capacity(cfg: Config, out: Path, seed: int, jobs: int = 1):
    cfg.require_known(CAPACITY_KEYS)
    fld = field_from_config(cfg)
    raw_q = cfg.text("q")
    if raw_q.strip().lower() == "critical":
        q_exact = Fraction(1) + Fraction(fld.alpha) / fld.n
    else:
        try:
            q_exact = Fraction(raw_q.strip())
        except ValueError:
            raise ConfigurationError(f"config key q: not a number: {raw_q!r}") from None
    radii = cfg.numbers("capacity.radii", [8.0, 16.0, 32.0, 64.0, 128.0])
    if len(radii) < 3:
        raise DomainError("need >= 3 radii for slope fit")
    nu = cfg.number("capacity.nu") if "capacity.nu" in cfg else None
    s = cfg.number("capacity.s") if "capacity.s" in cfg else None
    rep = cap.capacity_report(fld, float(q_exact), radii, nu=nu, s=s,
                              nt=cfg.integer("capacity.nt", 401), nr=cfg.integer("capacity.nr", 401),
                              e_q=q_exact)
    source = cfg.text("certificate.source", "none")
    certs = [_certificate_for(source, fld, float(q_exact), R, rep.nu, rep.s) for R in rep.R_list]
    rows = []
    for row, cert in zip(rep.rows, certs):
        lhs, rhs, ratio = (None, None, None) if cert is None else (cert.lhs, cert.rhs, cert.ratio)
        rows.append((row.R, row.T, row.J_time, row.J_space_d, row.J_space_qnu, lhs, rhs, ratio,
                     rep.slopes["J_time"], rep.slopes["J_space_d"], rep.slopes["J_space_qnu"]))
    path = out / "capacity.csv"
    write_csv(path, "capacity", rows)
    lines = [f"n={rep.n} alpha={rep.alpha:g} q={rep.q:g} nu={rep.nu:g} s={rep.s:g} "
             f"e1={fmt(rep.e1)} e2={fmt(rep.e2)}"]
    for key in rep.predicted:
        lines.append(f"{key}: slope {rep.slopes[key]:.6g} predicted {rep.predicted[key]:.6g} "
                     f"-> {'ok' if rep.within[key] else 'OUT OF TOLERANCE'}")
    return rep.ok, lines, path


def _certificate_for(source: str, fld, q: float, R: float, nu: float, s: float):
    if source == "none":
        return None
    cfgc = cap.CutoffConfig.for_radius(R, fld.alpha, q, nu=nu, s=s)
    if source == "exact":
        box = admissible_params(fld.n, fld.alpha, q) if fld.kind == "power" else None
        if box is None:
            raise ConfigurationError("config key certificate.source: exact needs a power field "
                                     "and supercritical q")
        p = box.params()
        grid = RadialGrid.uniform(fld.n, R, 401)
        w = GridFunction.from_function(grid, np.linspace(0.0, cfgc.T, 401),
                                       lambda tt, rr: eval_u(p, tt, rr))
        return cap.certificate(w, fld, q, cfgc)
    if source.startswith("csv:"):
        w = GridFunction.from_csv(source[4:], fld.n)
        return cap.certificate(w, fld, q, cfgc)
    raise ConfigurationError(f"config key certificate.source: unknown source {source!r}")


def cmd_envelope(cfg: Config, out: Path, seed: int, jobs: int = 1):
    cfg.require_known(ENVELOPE_KEYS)
    fld = field_from_config(cfg)
    radii = cfg.numbers("envelope.radii", [2.0, 4.0, 8.0, 16.0, 32.0, 64.0])
    rep = check_growth(fld, radii)
    rows = [(R, e, fld.c_growth * R ** (2.0 - fld.alpha), e <= fld.c_growth * R ** (2.0 - fld.alpha))
            for R, e in zip(rep.R_samples, rep.envelope_values)]
    path = out / "envelope.csv"
    write_csv(path, "envelope", rows)
    lines = [f"{fld.kind} alpha={fld.alpha:g} c={fld.c_growth:g}: fitted c={rep.c_fitted:.6g} "
             f"-> {'satisfied' if rep.satisfied else 'VIOLATED'}"]
    return rep.satisfied, lines, path


COMMANDS = {
    "verify-exact": cmd_verify_exact,
    "sweep": cmd_sweep,
    "capacity-check": cmd_capacity,
    "envelope": cmd_envelope,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fujita-lab",
        description="Exact supersolutions, blow-up sweeps and capacity scaling for "
                    "u_t = div(a grad u) + |u|^(q-1) u.",
        epilog=__doc__.split("CSV schemas", 1)[1].replace("-----------\n", "CSV schemas:\n"),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path, help="key=value config file")
    parser.add_argument("--out", type=Path, default=Path("fujita_out"),
                        help="output directory (env FUJITA_LAB_OUT overrides)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    parser.add_argument("--seed", type=int, default=0, help="seed for sampling operations (u64)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(os.environ.get("FUJITA_LAB_OUT") or args.out)
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = Config.load(args.config)
        out.mkdir(parents=True, exist_ok=True)
        ok, lines, path = COMMANDS[args.subcommand](cfg, out, args.seed, max(1, args.jobs))
    except SolverAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (FujitaLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for line in lines:
        print(line)
    summary = f"{'pass' if ok else 'fail'}: " + (lines[-1] if lines else "")
    append_catalog(out, args.subcommand, cfg.digest(), path, summary)
    print(f"wrote {path}")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
