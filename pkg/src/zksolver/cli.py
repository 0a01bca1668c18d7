"""Command-line drivers: run, verify, sweep, mms, poincare.

Failures end with exit status 1 (a check failed) or 2 (bad input, I/O or
solver abort) and one line on stderr::

    ERROR kind=<ExceptionName> message="<json-escaped text>"
"""

from __future__ import annotations

import argparse
from dataclasses import replace
import json
import logging
from pathlib import Path
import sys

import numpy as np

from . import functionals as fn
from . import verifier as vf
from .config import ConfigError, RunConfig, load_config, with_seed
from .domain import SpectralField, build_domain, mode_field, random_field
from .io import append_diagnostics, read_snapshot, write_snapshot
from .manufactured import mms_study
from .timestepper import run

log = logging.getLogger("zksolver")


class CheckFailed(RuntimeError):
    """At least one certified identity or bound failed."""


def initial_field(cfg: RunConfig, basis) -> SpectralField:
    ic = cfg.ic
    if ic.kind == "zero":
        return SpectralField.zeros(basis)
    if ic.kind == "modal":
        u = SpectralField.zeros(basis)
        for idx, (amp, phase) in ic.modes:
            u = u + mode_field(basis, *idx, amplitude=amp, phase=phase)
        return u
    if ic.kind == "random":
        rng = np.random.default_rng(cfg.seed)
        u = random_field(basis, rng, decay=ic.decay, mean_free=ic.mean_free, dealiased=True)
        return u * ic.scale
    u, _ = read_snapshot(ic.path, basis, resample=ic.resample)
    return u


def _out_dir(cfg: RunConfig, args) -> Path:
    out = Path(args.out or cfg.output.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out}: {exc.strerror}") from None
    return out


def _report(out: Path, cfg: RunConfig, text: str) -> None:
    (out / cfg.output.report).write_text(text + "\n")
    print(text)


def _finish(reports) -> int:
    failed = [r.name for r in reports if not r.passed]
    if failed:
        raise CheckFailed("failed: " + ", ".join(failed))
    return 0


def cmd_run(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    basis = build_domain(cfg.domain)
    u0 = initial_field(cfg, basis)
    diag_path = out / cfg.output.diagnostics
    diag_path.unlink(missing_ok=True)
    traj = run(u0, cfg.params, cadence=cfg.cadence, identity_snapshots=cfg.identity_snapshots,
               observers=(lambda state, rec: append_diagnostics(rec, diag_path),))
    write_snapshot(traj.final.u, out / cfg.output.snapshot, traj.final.t)
    tol = cfg.tolerances
    reports = [vf.check_l2_balance(traj, tol.balance), vf.check_gronwall_envelope(traj),
               vf.check_mean_law(traj, tol.mean_law)]
    p = cfg.params
    if p.epsilon == 0 and p.forcing.kind == "zero":
        reports += [vf.check_l2_conservation(traj, tol.l2_drift),
                    vf.check_e1_conservation(traj, tol.e1_drift)]
    lines = [f"run T={p.T} dt={p.dt} epsilon={p.epsilon} c={p.c} steps={traj.final.step_index}",
             f"final |u|={fn.l2_norm(traj.final.u):.12e}"]
    _report(out, cfg, "\n".join(lines + [r.line() for r in reports]))
    return _finish(reports)


def cmd_verify(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    v, tol = cfg.verify, cfg.tolerances
    basis = build_domain(cfg.domain)
    suite = vf.static_suite(basis, samples=v.samples, seed=cfg.seed, c=cfg.params.c,
                            skew_tol=tol.skew, neutral_tol=tol.neutral,
                            five_halves_samples=v.five_halves_samples,
                            five_halves_tol=tol.five_halves, include_basis=v.include_basis)
    head = f"static suite: {suite.field_count} fields, seed {cfg.seed}"
    _report(out, cfg, "\n".join([head] + [r.line() for r in suite.reports]))
    return _finish(suite.reports)


def cmd_poincare(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    basis = build_domain(cfg.domain)
    reports = vf.check_poincare_suite(cfg.verify.samples, cfg.seed, basis, cfg.tolerances.poincare)
    reports.append(vf.sample_l3_interpolation(cfg.verify.l3_samples, cfg.seed, basis))
    _report(out, cfg, "\n".join(r.line() for r in reports))
    return _finish(reports)


def cmd_mms(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    m = cfg.mms
    rep = mms_study(m.case, build_domain(cfg.domain), dts=m.dts, T=m.T,
                    epsilon=cfg.params.epsilon, c=cfg.params.c, amplitude=m.amplitude)
    _report(out, cfg, rep.table())
    if abs(rep.fitted_order - 4.0) > cfg.tolerances.mms_order:
        raise CheckFailed(f"observed order {rep.fitted_order:.3f} outside 4 +/- "
                          f"{cfg.tolerances.mms_order}")
    return 0


def parse_eps(text: str) -> tuple[float, int, float]:
    """``start:count[:ratio]`` geometric list (ratio defaults to 1/2)."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"--eps: expected start:count[:ratio], got {text!r}")
    try:
        start, count = float(parts[0]), int(parts[1])
        ratio = float(parts[2]) if len(parts) == 3 else 0.5
    except ValueError:
        raise ConfigError(f"--eps: malformed value {text!r}") from None
    if start <= 0 or count < 2 or not 0 < ratio < 1:
        raise ConfigError("--eps: need start > 0, count >= 2 and 0 < ratio < 1")
    return start, count, ratio


def cmd_sweep(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    s = cfg.sweep
    start, count, ratio = parse_eps(args.eps) if args.eps else (s.eps_start, s.eps_count,
                                                                 s.eps_ratio)
    basis = build_domain(cfg.domain)
    p = cfg.params
    sweep = vf.SweepConfig(basis, initial_field(cfg, basis), vf.geometric_eps(start, count, ratio),
                           dt=p.dt, T=p.T, c=p.c, forcing=p.forcing, cadence=cfg.cadence,
                           workers=s.workers or None, out_dir=str(out))
    rep = vf.run_eps_sweep(sweep)
    _report(out, cfg, rep.table())
    if not rep.complete:
        raise CheckFailed(rep.error)
    return 0


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep, "mms": cmd_mms,
            "poincare": cmd_poincare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML configuration file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        if name in ("verify", "poincare"):
            p.add_argument("--samples", type=int, help="random fields to sample")
        if name == "sweep":
            p.add_argument("--eps", help="geometric epsilon list start:count[:ratio]")
    return parser


def _emit_error(exc: BaseException) -> None:
    print(f"ERROR kind={type(exc).__name__} message={json.dumps(str(exc))}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = with_seed(cfg, args.seed)
        if getattr(args, "samples", None) is not None:
            if args.samples < 100:
                raise ConfigError("--samples: must be >= 100")
            cfg = replace(cfg, verify=replace(cfg.verify, samples=args.samples))
        return COMMANDS[args.command](cfg, args)
    except CheckFailed as exc:
        _emit_error(exc)
        return 1
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        _emit_error(exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
