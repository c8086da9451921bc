"""Experiment configuration: a flat key = value text file with typed values,
plus command-line overrides.  Flat and diffable on purpose: one line per key,
'#' comments, scalars parsed as int/float/bool, comma lists as tuples."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError


def _parse_scalar(text: str):
    low = text.strip()
    if low.lower() in ("true", "false"):
        return low.lower() == "true"
    try:
        return int(low)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        pass
    return low


def parse_flat_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        if "," in value:
            out[key] = tuple(_parse_scalar(v) for v in value.split(","))
        else:
            out[key] = _parse_scalar(value)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    # domain and operator
    left: float = -1.0
    right: float = 1.0
    n: int = 256
    a: float = 0.6
    # potential family
    potential: str = "zero"
    potential_value: float = 0.0
    potential_center: float = 0.2
    potential_width: float = 0.5
    potential_amplitude: float = 0.1
    potential_file: str = ""
    # spectral data
    modes: int = 20
    # time evolution
    horizon: float = 1.0
    steps: int = 1024
    boundary: str = "bump"
    boundary_side: str = "left"
    boundary_amplitude: float = 1.0
    # observability
    wave_modes: int = 6
    trials: int = 20
    eps: float = 0.0
    obs_horizon: float = 4.0
    # inverse runs
    reg: float = 1e-8
    max_iter: int = 40
    target: str = ""
    sweep_amplitudes: tuple = (1e-3, 1e-2, 1e-1)
    # laplace samples
    s_values: tuple = (0.5, 1.0, 2.0)
    # verification tolerances (acceptance-criteria defaults)
    tol_ibp: float = 1e-2
    tol_resolvent: float = 1e-12
    tol_series: float = 1e-10
    tol_laplace: float = 1e-6
    tol_pohozaev: float = 1e-2
    tol_equipartition: float = 1e-6
    tol_energy: float = 1e-12
    tol_transport: float = 1e-3
    # bookkeeping
    seed: int = 42
    out: str = "out"
    plots: bool = False

    def validated(self) -> "ExperimentConfig":
        if not 0.5 <= self.a < 1.0:
            raise ConfigError(f"a = {self.a} outside [0.5, 1)")
        if self.n < 2:
            raise ConfigError(f"n = {self.n} must be at least 2")
        if not self.right > self.left:
            raise ConfigError(f"degenerate interval [{self.left}, {self.right}]")
        if self.steps < 16:
            raise ConfigError(f"steps = {self.steps} must be at least 16")
        if self.modes < 1 or self.modes > self.n:
            raise ConfigError(f"modes = {self.modes} outside 1..{self.n}")
        if self.horizon <= 0:
            raise ConfigError(f"horizon = {self.horizon} must be positive")
        return self


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    """Read the flat file (if given), apply non-None overrides, validate."""
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        values.update(parse_flat_config(p.read_text()))
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**values)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validated()
