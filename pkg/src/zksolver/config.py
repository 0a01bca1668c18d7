"""Strict TOML run configuration.

Every section and key is whitelisted; unknown names are rejected so a typo
cannot silently fall back to a default.  Example::

    seed = 7

    [domain]
    d = 1
    Nx = 64
    Nt1 = 32

    [params]
    epsilon = 1e-3
    c = 1.0
    dt = 1e-3
    T = 1.0

    [ic]
    kind = "modal"
    modes = [{k = 1, n = 1, amplitude = 0.1}]
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli

from .domain import DomainSpec
from .forcing import ForcingSpec
from .operators import SolverParams


class ConfigError(ValueError):
    """Invalid configuration text or values."""


@dataclass(frozen=True)
class ICSpec:
    """Initial condition: zero, modal list, seeded random field, or snapshot file.

    Modal entries ``(k, n[, m], amplitude, phase)`` stand for
    ``amplitude * cos(2 pi k x + phase) phi_n [phi_m]``.
    """

    kind: str = "zero"
    modes: tuple = ()
    path: str | None = None
    decay: float = 3.0
    scale: float = 1.0
    mean_free: bool = False
    resample: bool = False


@dataclass(frozen=True)
class Tolerances:
    skew: float = 1e-10
    neutral: float = 1e-10
    five_halves: float = 1e-8
    poincare: float = 1e-12
    l2_drift: float = 1e-8
    e1_drift: float = 1e-6
    balance: float = 1e-6
    mean_law: float = 1e-13
    mms_order: float = 0.3
    sweep_spread: float = 0.1


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    diagnostics: str = "diagnostics.csv"
    snapshot: str = "final.zks"
    report: str = "report.txt"


@dataclass(frozen=True)
class VerifySpec:
    samples: int = 1000
    five_halves_samples: int = 50
    l3_samples: int = 100
    include_basis: bool = True


@dataclass(frozen=True)
class SweepSpec:
    eps_start: float = 1e-2
    eps_count: int = 5
    eps_ratio: float = 0.5
    workers: int = 0  # 0: ZK_THREADS or the CPU count


@dataclass(frozen=True)
class MMSSpec:
    case: str = "nonlinear-moderate"
    dts: tuple = (4e-3, 2e-3, 1e-3, 5e-4)
    T: float = 1.0
    amplitude: float | None = None


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec = field(default_factory=DomainSpec)
    params: SolverParams = field(default_factory=SolverParams)
    ic: ICSpec = field(default_factory=ICSpec)
    cadence: int = 1
    identity_snapshots: bool = False
    output: OutputSpec = field(default_factory=OutputSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    verify: VerifySpec = field(default_factory=VerifySpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    mms: MMSSpec = field(default_factory=MMSSpec)
    seed: int = 0

    def output_path(self, name: str, out_dir: str | None = None) -> Path:
        return Path(out_dir or self.output.dir) / getattr(self.output, name)


_DOMAIN_KEYS = {"d": int, "Nx": int, "Nt1": int, "Nt2": int, "transverse_bc": str}
_PARAM_KEYS = {"epsilon": float, "c": float, "dt": float, "T": float, "dealias": bool}
_FORCING_KEYS = {"kind": str, "modes": list, "case": str, "amplitude": float}
_IC_KEYS = {"kind": str, "modes": list, "path": str, "decay": float, "scale": float,
            "mean_free": bool, "resample": bool}
_DIAG_KEYS = {"cadence": int, "identity_snapshots": bool}
_SECTIONS = ("domain", "params", "forcing", "ic", "diagnostics", "tolerances", "output",
             "verify", "sweep", "mms")


def _typed(section: str, key: str, value, kind):
    where = f"{section}.{key}" if section else key
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is float and value is None:
        return None
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(f"{where}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _section(data: dict, name: str, schema: dict) -> dict:
    raw = data.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a table")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{name}: unknown key {unknown[0]!r}")
    return {k: _typed(name, k, v, schema[k]) for k, v in raw.items()}


def _schema_of(cls) -> dict:
    out = {}
    for f in fields(cls):
        default = f.default
        out[f.name] = type(default) if default is not None else float
        if out[f.name] is tuple:
            out[f.name] = list
    return out


def _mode_entry(section: str, entry, keys: tuple[str, ...], d: int) -> tuple:
    if not isinstance(entry, dict):
        raise ConfigError(f"{section}.modes: entries must be inline tables")
    allowed = {"k", "n", "m", *keys}
    unknown = sorted(set(entry) - allowed)
    if unknown:
        raise ConfigError(f"{section}.modes: unknown key {unknown[0]!r}")
    for req in ("k", "n") + (("m",) if d == 2 else ()):
        if req not in entry:
            raise ConfigError(f"{section}.modes: missing {req!r}")
        _typed(f"{section}.modes", req, entry[req], int)
    idx = (entry["k"], entry["n"]) + ((entry["m"],) if d == 2 else ())
    vals = tuple(float(_typed(f"{section}.modes", key, entry.get(key, 0.0), float)) for key in keys)
    return idx, vals


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; errors name the offending field."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", "?")
        col = getattr(exc, "colno", "?")
        msg = getattr(exc, "msg", str(exc))
        raise ConfigError(f"parse error at line {line}, column {col}: {msg}") from None
    unknown = sorted(k for k in data if k not in _SECTIONS and k != "seed")
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}")
    seed = _typed("", "seed", data.get("seed", 0), int)

    try:
        domain = DomainSpec(**_section(data, "domain", _DOMAIN_KEYS))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from None

    fsec = _section(data, "forcing", _FORCING_KEYS)
    modes = tuple((idx, *vals) for idx, vals in
                  (_mode_entry("forcing", e, ("amplitude", "frequency"), domain.d)
                   for e in fsec.pop("modes", [])))
    try:
        forcing = ForcingSpec(modes=modes, **fsec)
    except ValueError as exc:
        raise ConfigError(f"forcing: {exc}") from None

    try:
        params = SolverParams(forcing=forcing, **_section(data, "params", _PARAM_KEYS))
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None

    isec = _section(data, "ic", _IC_KEYS)
    ic_modes = tuple(_mode_entry("ic", e, ("amplitude", "phase"), domain.d)
                     for e in isec.pop("modes", []))
    ic = ICSpec(modes=ic_modes, **isec)
    if ic.kind not in ("zero", "modal", "random", "snapshot"):
        raise ConfigError(f"ic.kind: unknown initial condition {ic.kind!r}")
    if ic.kind == "snapshot" and not ic.path:
        raise ConfigError("ic.path: snapshot initial condition needs a path")

    diag = _section(data, "diagnostics", _DIAG_KEYS)
    cadence = diag.get("cadence", 1)
    if cadence < 1:
        raise ConfigError("diagnostics.cadence: must be >= 1")

    tol = Tolerances(**_section(data, "tolerances", _schema_of(Tolerances)))
    output = OutputSpec(**_section(data, "output", _schema_of(OutputSpec)))
    verify = VerifySpec(**_section(data, "verify", _schema_of(VerifySpec)))
    if verify.samples < 100:
        raise ConfigError("verify.samples: must be >= 100")
    sweep = SweepSpec(**_section(data, "sweep", _schema_of(SweepSpec)))
    if sweep.eps_count < 2 or not 0 < sweep.eps_ratio < 1 or sweep.eps_start <= 0:
        raise ConfigError("sweep: need eps_start > 0, eps_count >= 2 and 0 < eps_ratio < 1")
    msec = _section(data, "mms", _schema_of(MMSSpec))
    if "dts" in msec:
        msec["dts"] = tuple(float(_typed("mms", "dts", v, float)) for v in msec["dts"])
    mms = MMSSpec(**msec)
    return RunConfig(domain=domain, params=params, ic=ic, cadence=cadence,
                     identity_snapshots=diag.get("identity_snapshots", False), output=output,
                     tolerances=tol, verify=verify, sweep=sweep, mms=mms, seed=seed)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text)


def with_seed(cfg: RunConfig, seed: int | None) -> RunConfig:
    return cfg if seed is None else replace(cfg, seed=seed)
