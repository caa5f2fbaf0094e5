"""Command-line driver: ``rzfmimo {asym,mc,sweep,power,figure} ...``.

Every mode writes one CSV table with a fixed column order (see ``HEADER``).
Monte Carlo columns are left empty when no trials were run.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass

from .asymptotics import predict
from .channel import ConfigError, Scenario
from .config import MODES, PRESETS, ExperimentSpec, parse_config
from .correlation import CorrelationError
from .montecarlo import SweepRow, resolve_lambda, sweep
from .power import power_allocation

log = logging.getLogger("rzfmimo")

HEADER = (
    "var", "value", "mse_mc", "mse_stderr", "ber_mc", "ber_stderr", "mse_asym", "ber_asym",
    "nu_star", "mu_star", "lambda_star", "alpha_star", "status",
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


@dataclass
class Row:
    var: str
    value: float
    mse_mc: float | None = None
    mse_stderr: float | None = None
    ber_mc: float | None = None
    ber_stderr: float | None = None
    mse_asym: float | None = None
    ber_asym: float | None = None
    nu_star: float | None = None
    mu_star: float | None = None
    lambda_star: float | None = None
    alpha_star: float | None = None
    status: str = "ok"

    @classmethod
    def from_sweep(cls, row: SweepRow) -> Row:
        out = cls(row.var, row.value, lambda_star=row.lambda_star, status=row.status)
        if row.aggregate is not None:
            a = row.aggregate
            out.mse_mc, out.mse_stderr, out.ber_mc, out.ber_stderr = a.mean_mse, a.stderr_mse, a.mean_ber, a.stderr_ber
        if row.prediction is not None:
            p = row.prediction
            out.mse_asym, out.ber_asym = p.mse, p.ber
            out.nu_star, out.mu_star = p.fixed_point.nu_star, p.fixed_point.mu_star
        return out

    def cells(self) -> list[str]:
        return [self.var, _fmt(self.value)] + [
            _fmt(getattr(self, k)) for k in HEADER[2:-1]
        ] + [self.status]


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".12g")


def render_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def _single_point(spec: ExperimentSpec, with_mc: bool) -> list[Row]:
    cfg = spec.cfg
    sc = Scenario(cfg)
    lam = resolve_lambda(cfg, sc)
    rows = sweep(cfg.with_(lam=lam), "lambda", [lam], spec.trials if with_mc else 0, spec.seed,
                 workers=spec.workers, faithful_training=spec.faithful_training)
    return [Row.from_sweep(r) for r in rows]


def _sweep_rows(spec: ExperimentSpec, cfg=None, label=None) -> list[Row]:
    var, values = spec.sweep
    rows = sweep(cfg or spec.cfg, var, values, spec.trials, spec.seed, workers=spec.workers,
                 faithful_training=spec.faithful_training, label=label)
    return [Row.from_sweep(r) for r in rows]


def _power_rows(spec: ExperimentSpec) -> list[Row]:
    if spec.sweep is not None and spec.sweep[0] != "r":
        raise ConfigError("power mode sweeps the correlation coefficient only (sweep.variable = r)")
    r_values = spec.sweep[1] if spec.sweep else (spec.cfg.correlation.r,)
    rows = []
    for r in r_values:
        cfg = spec.cfg.with_(r=r, lam="optimal")
        try:
            res = power_allocation(cfg)
        except Exception as exc:
            log.warning("power allocation at r=%s failed: %s", r, exc)
            rows.append(Row("r", r, status=f"error: {exc}"))
            continue
        for tag, alpha in (("r", res.alpha_mse), ("r:ber", res.alpha_ber), ("r:closed_form", res.alpha_closed_form)):
            row = Row(tag, r, alpha_star=alpha)
            if not math.isnan(alpha):
                point = cfg.with_(alpha=alpha)
                sc = Scenario(point)
                lam = resolve_lambda(point, sc)
                pred = predict(sc.model, sc.powers.rho_d, lam, point.n, point.rdelta)
                row.mse_asym, row.ber_asym = pred.mse, pred.ber
                row.nu_star, row.mu_star = pred.fixed_point.nu_star, pred.fixed_point.mu_star
                row.lambda_star = lam
            rows.append(row)
    return rows


def _figure_rows(spec: ExperimentSpec) -> list[Row]:
    name = spec.preset
    if name == "fig7":
        return _power_rows(spec)
    if name == "fig2":
        return _sweep_rows(spec)
    var = spec.sweep[0]
    rows: list[Row] = []
    if name == "fig6":
        rows += _sweep_rows(spec, spec.cfg.with_(lam="optimal"), f"{var}|rzf")
        rows += _sweep_rows(spec, spec.cfg.with_(lam=0.0), f"{var}|zf")
        return rows
    for r in spec.series or (spec.cfg.correlation.r,):
        rows += _sweep_rows(spec, spec.cfg.with_(r=r), f"{var}|r={r:g}")
    return rows


def execute(spec: ExperimentSpec) -> list[Row]:
    if spec.mode == "asym":
        return _single_point(spec, with_mc=False)
    if spec.mode == "mc":
        if spec.trials < 1:
            raise ConfigError("mc mode needs --trials >= 1")
        return _single_point(spec, with_mc=True)
    if spec.mode == "sweep":
        return _sweep_rows(spec)
    if spec.mode == "power":
        return _power_rows(spec)
    return _figure_rows(spec)


def run(spec: ExperimentSpec) -> int:
    """Execute ``spec``, write its CSV and return the process exit status."""
    rows = execute(spec)
    text = render_csv(rows)
    if spec.out == "-":
        sys.stdout.write(text)
    else:
        with open(spec.out, "w", newline="") as fh:
            fh.write(text)
    bad = [r for r in rows if r.status != "ok"]
    for r in bad:
        log.error("%s=%s: %s", r.var, r.value, r.status)
    return EXIT_RUNTIME if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rzfmimo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--preset", choices=PRESETS, required=(mode == "figure"))
        p.add_argument("--config", help="sectioned key/value config file")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="output CSV path, '-' for stdout")
        p.add_argument("--lambda", dest="lam", help="regularizer value or 'optimal'")
        p.add_argument("--alpha", type=float)
        p.add_argument("--rho-db", type=float)
        p.add_argument("--r", type=float, help="correlation coefficient")
        p.add_argument("--n", type=int)
        p.add_argument("--zeta", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--tau-t", type=float)
        p.add_argument("--correlation-model", choices=("exponential", "standard-exponential", "identity", "file"))
        p.add_argument("--correlation-file")
        p.add_argument("--sweep-var", choices=("lambda", "rho_db", "alpha", "r"))
        p.add_argument("--values", help="comma list or start:stop:step")
        p.add_argument("--faithful-training", action="store_true", default=None)
        rd = p.add_mutually_exclusive_group()
        rd.add_argument("--rdelta", choices=("eigen", "diagonal"))
        rd.add_argument("--raw-diagonal-rdelta", dest="rdelta", action="store_const", const="diagonal")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    flags = {
        "trials": args.trials, "seed": args.seed, "workers": args.workers, "out": args.out,
        "lambda": args.lam, "alpha": args.alpha, "rho_db": args.rho_db, "r": args.r, "n": args.n,
        "zeta": args.zeta, "tau": args.tau, "tau_t": args.tau_t, "model": args.correlation_model,
        "path": args.correlation_file, "variable": args.sweep_var, "values": args.values,
        "faithful_training": args.faithful_training, "rdelta": args.rdelta,
    }
    try:
        spec = parse_config(args.mode, args.config, args.preset, flags)
    except (ConfigError, CorrelationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(spec)
    except (ConfigError, CorrelationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
