"""Experiment specification: sectioned key/value config files, presets and flag overrides."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .channel import ConfigError, CorrelationSpec, SystemConfig
from .montecarlo import SWEEP_VARIABLES

MODES = ("asym", "mc", "sweep", "power", "figure")
PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")

# keys accepted per config-file section, mapped to ExperimentSpec/SystemConfig fields
KNOWN_KEYS = {
    "system": {"n", "zeta", "tau", "tau_t", "rho_db", "alpha", "lambda", "rdelta"},
    "correlation": {"model", "r", "path"},
    "sweep": {"variable", "values"},
    "montecarlo": {"trials", "seed", "workers", "faithful_training"},
    "output": {"out"},
}


@dataclass(frozen=True)
class ExperimentSpec:
    cfg: SystemConfig
    mode: str
    sweep: tuple[str, tuple[float, ...]] | None = None
    trials: int = 0
    seed: int = 0
    out: str = "-"
    preset: str | None = None
    workers: int = 1
    faithful_training: bool = False
    series: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "figure" and self.preset not in PRESETS:
            raise ConfigError(f"mode=figure needs --preset in {PRESETS}")
        if self.trials < 0:
            raise ConfigError(f"trials must be >= 0, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.sweep is not None:
            var, values = self.sweep
            if var not in SWEEP_VARIABLES:
                raise ConfigError(f"sweep.variable must be one of {SWEEP_VARIABLES}, got {var!r}")
            if not values:
                raise ConfigError("sweep.values must not be empty")


def _preset_corr(r: float) -> CorrelationSpec:
    return CorrelationSpec("standard-exponential", r)


def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    count = int(round((stop - start) / step)) + 1
    return tuple(float(round(start + k * step, 10)) for k in range(count))


def preset(name: str) -> ExperimentSpec:
    """Figure presets; ``T = 1000`` and ``T_t = n`` fix ``tau = 1000/n`` and ``tau_t = 1``."""
    fig2_cfg = SystemConfig(
        n=400, zeta=1.5, tau=2.5, tau_t=1.0, rho_db=10.0, alpha=0.5, lam="optimal",
        correlation=_preset_corr(0.4), rdelta="diagonal",
    )
    rho_cfg = fig2_cfg.with_(n=500, tau=2.0)
    rho_grid = _grid(0.0, 20.0, 2.0)
    if name == "fig2":
        return ExperimentSpec(fig2_cfg, "sweep", ("lambda", _grid(0.001, 2.001, 0.01)), trials=500, preset=name)
    if name == "fig3":
        return ExperimentSpec(rho_cfg, "sweep", ("rho_db", _grid(0.0, 30.0, 2.0)), trials=0, preset=name,
                              series=(0.0, 0.4, 0.7, 0.9))
    if name in ("fig4", "fig5"):
        return ExperimentSpec(rho_cfg, "sweep", ("rho_db", rho_grid), trials=500, preset=name, series=(0.0, 0.4, 0.9))
    if name == "fig6":
        return ExperimentSpec(rho_cfg, "sweep", ("rho_db", rho_grid), trials=500, preset=name)
    if name == "fig7":
        return ExperimentSpec(fig2_cfg, "power", ("r", _grid(0.0, 0.9, 0.1)), trials=0, preset=name)
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESETS}")


def parse_values(text: str) -> tuple[float, ...]:
    """``"0.1,0.2,0.5"`` or ``"start:stop:step"`` (inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ConfigError("sweep step must be > 0")
            return _grid(start, stop, step)
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"sweep.values: cannot parse {text!r}") from exc


def _parse_lambda(text) -> float | str:
    if isinstance(text, str) and text.strip().lower() == "optimal":
        return "optimal"
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"lambda must be a number or 'optimal', got {text!r}") from exc


def _as_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def read_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        if section not in KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(parser[section]) - KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
        out[section] = dict(parser[section])
    return out


def _num(section: str, key: str, text: str, kind=float):
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {text!r} as {kind.__name__}") from exc


def build_spec(mode: str, preset_name: str | None = None, file_values: dict | None = None, flags: dict | None = None) -> ExperimentSpec:
    """Layer preset, then config file, then flags (later wins); validate everything.

    ``flags`` uses the file key names (``lambda``, ``rho_db``, ``r`` ...);
    ``None`` values are ignored.
    """
    base = preset(preset_name) if preset_name else ExperimentSpec(SystemConfig(), mode)
    merged: dict[str, dict[str, object]] = {s: {} for s in KNOWN_KEYS}
    for section, values in (file_values or {}).items():
        merged[section].update(values)
    for key, value in (flags or {}).items():
        if value is None:
            continue
        section = next((s for s, keys in KNOWN_KEYS.items() if key in keys), None)
        if section is None:
            raise ConfigError(f"unknown option {key!r}")
        merged[section][key] = value

    cfg = base.cfg
    sys_ = merged["system"]
    changes: dict[str, object] = {}
    for key, kind in (("n", int), ("zeta", float), ("tau", float), ("tau_t", float), ("rho_db", float), ("alpha", float)):
        if key in sys_:
            changes[key] = _num("system", key, sys_[key], kind) if isinstance(sys_[key], str) else kind(sys_[key])
    if "lambda" in sys_:
        changes["lam"] = _parse_lambda(sys_["lambda"])
    if "rdelta" in sys_:
        changes["rdelta"] = str(sys_["rdelta"])

    corr = merged["correlation"]
    if corr:
        kind = str(corr.get("model", cfg.correlation.kind))
        r = corr.get("r", cfg.correlation.r)
        r = _num("correlation", "r", r) if isinstance(r, str) else float(r)
        changes["correlation"] = CorrelationSpec(kind, r, corr.get("path", cfg.correlation.path))
    cfg = replace(cfg, **changes)

    sweep = base.sweep
    sw = merged["sweep"]
    if "variable" in sw or "values" in sw:
        var = str(sw.get("variable", sweep[0] if sweep else ""))
        vals = sw.get("values")
        if vals is None:
            if not sweep or sweep[0] != var:
                raise ConfigError("sweep.values is required when the sweep variable changes")
            values = sweep[1]
        else:
            values = parse_values(vals) if isinstance(vals, str) else tuple(float(v) for v in vals)
        sweep = (var, values)

    mc = merged["montecarlo"]
    trials = int(_num("montecarlo", "trials", str(mc["trials"]), int)) if "trials" in mc else base.trials
    seed = int(_num("montecarlo", "seed", str(mc["seed"]), int)) if "seed" in mc else base.seed
    workers = int(_num("montecarlo", "workers", str(mc["workers"]), int)) if "workers" in mc else base.workers
    faithful = base.faithful_training
    if "faithful_training" in mc:
        ft = mc["faithful_training"]
        faithful = _as_bool(ft) if isinstance(ft, str) else bool(ft)
    out = str(merged["output"].get("out", base.out))

    if preset_name == "fig3":
        trials = 0
    if mode == "sweep" and sweep is None:
        raise ConfigError("sweep mode needs [sweep] variable and values")
    return ExperimentSpec(
        cfg=cfg, mode=mode, sweep=sweep, trials=trials, seed=seed, out=out, preset=preset_name,
        workers=workers, faithful_training=faithful, series=base.series,
    )


def parse_config(mode: str, config_path: str | None = None, preset_name: str | None = None,
                 flags: dict | None = None) -> ExperimentSpec:
    """Build a validated spec from an optional config file plus flag overrides."""
    file_values = read_config_file(config_path) if config_path else None
    return build_spec(mode, preset_name, file_values, flags)
