"""Numerical certification of the energy identities and inequalities.

Static checks act on single fields; trajectory checks read the diagnostics
recorded by :mod:`zksolver.timestepper`.  Every check returns an
:class:`IdentityReport` with a documented normalizer, so residuals are
comparable across fields of very different size.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import itertools
import os
from pathlib import Path

import numpy as np

from . import functionals as fn
from .domain import (Basis, SpectralField, build_domain, modal_inner, mode_field,
                     project_dealias, random_field)
from .forcing import ForcingSpec
from .operators import SolverParams, diff, nonlinear_term
from .quadrature import integrate_abs_product, integrate_product
from .timestepper import BlowUpError, Trajectory, run

TRANSVERSE = ("y", "z")
WORK_Q = 3
ORACLE_Q = 12  # 4x the working oversampling
ORACLE_RTOL = 1e-12


@dataclass(frozen=True)
class IdentityReport:
    name: str
    lhs: float
    rhs: float
    residual: float
    scale: float
    tolerance: float
    passed: bool
    oracle: float | None = None  # lhs recomputed at 4x resolution, when applicable

    @classmethod
    def build(cls, name, lhs, rhs, scale, tolerance, oracle=None, oracle_ok=True):
        lhs, rhs, scale = float(lhs), float(rhs), float(scale)
        residual = abs(lhs - rhs) / scale if scale > 0 else abs(lhs - rhs)
        return cls(name, lhs, rhs, residual, scale, tolerance,
                   bool(residual <= tolerance and oracle_ok), oracle)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: residual={self.residual:.3e} tol={self.tolerance:.1e} "
                f"lhs={self.lhs:.6e} rhs={self.rhs:.6e} scale={self.scale:.3e}")


def _laplacian(u: SpectralField) -> SpectralField:
    out = diff(u, "x", 2)
    for ax in TRANSVERSE[: u.basis.spec.d]:
        out = out + diff(u, ax, 2)
    return out


# -- static identities -----------------------------------------------------

def check_skew(u: SpectralField, c: float = 1.0, tolerance: float = 1e-12) -> IdentityReport:
    """<Delta u_x + c u_x, u> = 0, normalized by |u| |Delta u_x + c u_x|."""
    v = diff(_laplacian(u), "x", 1) + diff(u, "x", 1) * c
    lhs = modal_inner(v, u)
    return IdentityReport.build("skew", lhs, 0.0, fn.l2_norm(u) * fn.l2_norm(v), tolerance)


def check_nonlinear_neutral(u: SpectralField, tolerance: float = 1e-10,
                            dealias: bool = True, oracle: bool = False) -> IdentityReport:
    """<N(u), u> = 0 with N the projected u u_x.

    Normalized by |P u| |N(u)| where P is the dealiasing projection.  With
    ``oracle`` the pairing is recomputed as -1/2 int w^2 w_x (w = P u) by
    exact quadrature on a 4x grid and must vanish too.
    """
    w = project_dealias(u) if dealias else u
    N = nonlinear_term(u, dealias)
    lhs = modal_inner(N, u)
    scale = fn.l2_norm(w) * fn.l2_norm(N)
    value = None
    if oracle and dealias:
        value = -0.5 * integrate_product(w, w, diff(w, "x", 1), q=ORACLE_Q)
    ok = value is None or scale == 0 or abs(value) <= tolerance * scale
    name = "nonlinear-neutral" if dealias else "nonlinear-neutral-aliased"
    return IdentityReport.build(name, lhs, 0.0, scale, tolerance, value, ok)


def check_52_identity(u: SpectralField, tolerance: float = 1e-8) -> IdentityReport:
    """int u u_x u_xxxx = 5/2 int u_x u_xx^2.

    Both sides use exact oversampled quadrature and are recomputed on a 4x
    finer grid; the residual is normalized by the larger of the two absolute
    integrands.
    """
    ux, uxx, uxxxx = diff(u, "x", 1), diff(u, "x", 2), diff(u, "x", 4)
    lhs = integrate_product(u, ux, uxxxx, q=WORK_Q)
    rhs = 2.5 * integrate_product(ux, uxx, uxx, q=WORK_Q)
    lhs_o = integrate_product(u, ux, uxxxx, q=ORACLE_Q)
    rhs_o = 2.5 * integrate_product(ux, uxx, uxx, q=ORACLE_Q)
    scale = max(integrate_abs_product(u, ux, uxxxx, q=WORK_Q),
                2.5 * integrate_abs_product(ux, uxx, uxx, q=WORK_Q))
    agree = max(abs(lhs - lhs_o), abs(rhs - rhs_o)) <= ORACLE_RTOL * max(scale, 1e-300)
    return IdentityReport.build("five-halves", lhs, rhs, scale, tolerance, lhs_o, agree or scale == 0)


@dataclass(frozen=True)
class PoincareSample:
    ratio_x: float      # |u_x| / |u_xx|
    ratio_mixed: float  # mixed second derivatives^2 / [u]_2^2
    ratio_h2: float     # |u|_{H2}^2 / ([u]_2^2 + |u|^2)


def poincare_ratios(u: SpectralField) -> PoincareSample:
    uxx = fn.dx_sq(u, 2)
    semi = fn.seminorm2_sq(u)
    l2 = fn.l2_norm(u) ** 2
    return PoincareSample(
        ratio_x=float(np.sqrt(fn.dx_sq(u, 1) / uxx)) if uxx > 0 else 0.0,
        ratio_mixed=fn.mixed_sq(u) / semi if semi > 0 else 0.0,
        ratio_h2=fn.h2_sq(u) / (semi + l2) if semi + l2 > 0 else 1.0)


def check_poincare_suite(sample_count: int = 1000, seed: int = 0, basis: Basis | None = None,
                         tolerance: float = 1e-12) -> list[IdentityReport]:
    """Empirical constants of the seminorm inequalities on random x-mean-free fields.

    ratio_x is compared with 1/(2 pi), ratio_mixed with 1; the H2
    equivalence ratio is only reported (passes when finite).
    """
    if sample_count < 100:
        raise ValueError("sample_count must be >= 100")
    basis = basis or build_domain_default()
    rng = np.random.default_rng(seed)
    samples = [poincare_ratios(random_field(basis, rng, mean_free=True))
               for _ in range(sample_count)]
    rx = max(s.ratio_x for s in samples)
    rm = max(s.ratio_mixed for s in samples)
    rh = max(s.ratio_h2 for s in samples)
    bound = 1.0 / (2 * np.pi)
    return [
        IdentityReport("poincare-x", rx, bound, max(rx - bound, 0.0), 1.0, tolerance,
                       bool(rx <= bound + tolerance)),
        IdentityReport("mixed-derivative", rm, 1.0, max(rm - 1.0, 0.0), 1.0, tolerance,
                       bool(rm <= 1.0 + tolerance)),
        IdentityReport("h2-equivalence", rh, float("nan"), 0.0, 1.0, float("inf"),
                       bool(np.isfinite(rh))),
    ]


def l3_interpolation_ratio(u: SpectralField) -> float:
    """|u|_{L3} / (|u|^{1/2} |grad u|^{1/2})."""
    den = np.sqrt(fn.l2_norm(u) * fn.grad_l2(u))
    return fn.lp_norm(u, 3) / den if den > 0 else 0.0


def sample_l3_interpolation(sample_count: int = 100, seed: int = 0,
                            basis: Basis | None = None) -> IdentityReport:
    basis = basis or build_domain_default()
    rng = np.random.default_rng(seed)
    worst = max(l3_interpolation_ratio(random_field(basis, rng)) for _ in range(sample_count))
    return IdentityReport("l3-interpolation", worst, float("nan"), 0.0, 1.0, float("inf"),
                          bool(np.isfinite(worst)))


def build_domain_default() -> Basis:
    from .domain import DomainSpec

    return build_domain(DomainSpec(d=1, Nx=64, Nt1=32))


def basis_elements(basis: Basis):
    """Every real basis function in the admissible span.

    x-factors cos/sin(2 pi k x); dirichlet factors sin(n s); periodic
    factors cos(2 j s) and, for j > 0, sin(2 j s).
    """
    per_axis = []
    for ax in basis.axes:
        if ax.bc == "dirichlet":
            per_axis.append([(q, False) for q in range(1, ax.N + 1)])
        else:
            per_axis.append([(0, False)] + [(q, v) for q in range(1, ax.N // 2) for v in (False, True)])
    for k in range(basis.spec.Nx // 2):
        for ph in ((0.0,) if k == 0 else (0.0, -np.pi / 2)):
            for combo in itertools.product(*per_axis):
                f = mode_field(basis, k, *(q for q, _ in combo), phase=ph)
                c = np.array(f.coeffs)
                for i, (q, sine) in enumerate(combo):
                    if sine:
                        # cos(2qs) -> sin(2qs): +q gets -i/2, -q gets +i/2
                        sl = [slice(None)] * c.ndim
                        sl[i + 1] = (-q) % basis.axes[i].N
                        c[tuple(sl)] *= -1.0
                        c *= -1j
                yield SpectralField(c, basis)


@dataclass
class StaticSuiteReport:
    reports: list[IdentityReport]
    field_count: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _worst(reports: list[IdentityReport]) -> IdentityReport:
    failing = [r for r in reports if not r.passed]
    pool = failing or reports
    return max(pool, key=lambda r: r.residual)


def static_suite(basis: Basis | None = None, samples: int = 1000, seed: int = 0, c: float = 1.0,
                 skew_tol: float = 1e-10, neutral_tol: float = 1e-10,
                 five_halves_samples: int = 50, five_halves_tol: float = 1e-8,
                 include_basis: bool = True) -> StaticSuiteReport:
    """Skew and nonlinear-neutral checks on all basis elements and seeded random
    fields, the 5/2 identity on random fields, and the Poincare suite.

    Each identity contributes its worst report.
    """
    basis = basis or build_domain_default()
    rng = np.random.default_rng(seed)
    fields = list(basis_elements(basis)) if include_basis else []
    fields += [random_field(basis, rng) for _ in range(samples)]
    skew = [check_skew(u, c, skew_tol) for u in fields]
    neutral = [check_nonlinear_neutral(u, neutral_tol) for u in fields]
    five = [check_52_identity(random_field(basis, rng), five_halves_tol)
            for _ in range(five_halves_samples)]
    reports = [_worst(skew), _worst(neutral)]
    if five:
        reports.append(_worst(five))
    reports += check_poincare_suite(max(samples, 100), seed, basis)
    return StaticSuiteReport(reports, len(fields))


# -- trajectory checks -------------------------------------------------------

def check_e1_conservation(traj: Trajectory, tolerance: float = 1e-6) -> IdentityReport:
    """max_t |E1(t) - E1(0)| / (1 + |E1(0)|)."""
    e = traj.column("E1")
    i = int(np.argmax(np.abs(e - e[0])))
    return IdentityReport.build("e1-conservation", e[i], e[0], 1.0 + abs(e[0]), tolerance)


def check_l2_conservation(traj: Trajectory, tolerance: float = 1e-8) -> IdentityReport:
    """max_t ||u(t)| - |u0|| / |u0|."""
    n = traj.column("l2")
    i = int(np.argmax(np.abs(n - n[0])))
    return IdentityReport.build("l2-conservation", n[i], n[0], n[0] if n[0] > 0 else 1.0, tolerance)


def check_l2_balance(traj: Trajectory, tolerance: float = 1e-6) -> IdentityReport:
    """|u(T)|^2 + 2 eps int [u]_2^2 - |u0|^2 - 2 int <f,u>, over |u0|^2 + int |f|^2."""
    r0, rT = traj.records[0], traj.records[-1]
    lhs = rT.l2 ** 2 + rT.diss_integral
    rhs = r0.l2 ** 2 + rT.forcing_integral
    scale = r0.l2 ** 2 + rT.forcing_sq_integral
    return IdentityReport.build("l2-balance", lhs, rhs, scale if scale > 0 else 1.0, tolerance)


def check_gronwall_envelope(traj: Trajectory, slack: float = 1e-12) -> IdentityReport:
    """|u(t)|^2 <= e^t (|u0|^2 + int_0^t |f|^2) at every recorded sample."""
    t = traj.times
    l2sq = traj.column("l2") ** 2
    env = np.exp(t) * (l2sq[0] + traj.column("forcing_sq_integral"))
    ratio = np.where(env > 0, l2sq / np.where(env > 0, env, 1.0), 0.0)
    worst = float(ratio.max())
    return IdentityReport("gronwall-envelope", worst, 1.0, max(worst - 1.0, 0.0), 1.0, slack,
                          bool(np.all(l2sq <= env * (1 + slack))))


def check_mean_law(traj: Trajectory, tolerance: float = 1e-13) -> IdentityReport:
    """max_t of the L2(transverse) mismatch between the x-mean and its exact law."""
    res = traj.column("mean_residual")
    worst = float(res.max())
    return IdentityReport("mean-law", worst, 0.0, worst, 1.0, tolerance, bool(worst <= tolerance))


def check_mean_agreement(a: Trajectory, b: Trajectory, tolerance: float = 1e-13) -> IdentityReport:
    """w = u_a - u_b has zero x-mean at every time both runs sampled."""
    if not a.states or not b.states:
        raise ValueError("trajectories must keep states")
    tb = {round(s.t, 12): s for s in b.states}
    worst = 0.0
    for s in a.states:
        other = tb.get(round(s.t, 12))
        if other is not None:
            worst = max(worst, fn.mean_l2(s.u.coeffs[0] - other.u.coeffs[0], s.u))
    return IdentityReport("mean-difference", worst, 0.0, worst, 1.0, tolerance,
                          bool(worst <= tolerance))


# -- epsilon sweep -------------------------------------------------------------

@dataclass
class SweepConfig:
    basis: Basis
    u0: SpectralField
    epsilons: tuple[float, ...]
    dt: float = 1e-3
    T: float = 1.0
    c: float = 1.0
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    cadence: int = 10
    workers: int | None = None
    out_dir: str | None = None  # per-member diagnostics go to out_dir/member-<i>

    def __post_init__(self):
        eps = list(self.epsilons)
        if len(eps) < 2 or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing with at least two members")
        if any(e <= 0 for e in eps):
            raise ValueError("sweep epsilons must be > 0")


def geometric_eps(start: float, count: int, ratio: float = 0.5) -> tuple[float, ...]:
    return tuple(start * ratio ** i for i in range(count))


@dataclass
class SweepReport:
    epsilons: list[float]
    pairwise_gaps: list[float]
    bound_table: list[dict]
    error: str | None = None

    COLUMNS = ("epsilon", "sup_l2_sq", "sup_grad_sq", "eps_semi2_integral",
               "eps_grad_semi2_integral")

    @property
    def complete(self) -> bool:
        return self.error is None

    def spread(self, column: str) -> float:
        """(max - min) / min of one bound-table column across members."""
        v = np.array([row[column] for row in self.bound_table])
        return float((v.max() - v.min()) / v.min()) if v.min() > 0 else float("inf")

    @property
    def gaps_decreasing(self) -> bool:
        g = self.pairwise_gaps
        return all(b < a for a, b in zip(g, g[1:]))

    def table(self) -> str:
        lines = [" ".join(f"{c:>24}" for c in self.COLUMNS)]
        for row in self.bound_table:
            lines.append(" ".join(f"{row[c]:>24.12e}" for c in self.COLUMNS))
        lines.append("gaps: " + " ".join(f"{g:.6e}" for g in self.pairwise_gaps))
        if self.error:
            lines.append(f"error: {self.error}")
        return "\n".join(lines)


def _sweep_member(args):
    spec, coeffs, eps, dt, T, c, forcing, cadence, out = args
    basis = build_domain(spec)
    u0 = SpectralField(coeffs, basis)
    params = SolverParams(epsilon=eps, c=c, dt=dt, T=T, forcing=forcing)
    observers = ()
    if out is not None:
        from .io import append_diagnostics

        path = Path(out) / "diagnostics.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.unlink(missing_ok=True)
        observers = (lambda state, rec: append_diagnostics(rec, path),)
    try:
        tr = run(u0, params, cadence=cadence, keep_states=True, observers=observers)
    except BlowUpError as exc:
        return eps, None, str(exc)
    row = {"epsilon": eps,
           "sup_l2_sq": float(np.max(tr.column("l2") ** 2)),
           "sup_grad_sq": float(np.max(tr.column("grad_l2") ** 2)),
           "eps_semi2_integral": tr.records[-1].eps_semi2_integral,
           "eps_grad_semi2_integral": tr.records[-1].eps_grad_semi2_integral}
    states = np.stack([s.u.coeffs for s in tr.states])
    return eps, (row, states), None


def _worker_count(requested: int | None, members: int) -> int:
    cap = os.environ.get("ZK_THREADS")
    n = requested or (int(cap) if cap else os.cpu_count() or 1)
    return max(1, min(n, members))


def run_eps_sweep(config: SweepConfig) -> SweepReport:
    """Run one trajectory per epsilon and tabulate epsilon-uniform bounds.

    Members are independent and run in worker processes (capped by
    ZK_THREADS).  A failed member voids the sweep; the report then holds the
    rows gathered before the failure.
    """
    jobs = [(config.basis.spec, np.array(config.u0.coeffs), eps, config.dt, config.T, config.c,
             config.forcing, config.cadence,
             None if config.out_dir is None else str(Path(config.out_dir) / f"member-{i}"))
            for i, eps in enumerate(config.epsilons)]
    workers = _worker_count(config.workers, len(jobs))
    if workers == 1:
        results = [_sweep_member(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_member, jobs))
    rows, states, error = [], [], None
    for eps, payload, err in results:
        if err is not None:
            error = f"member epsilon={eps:g} aborted: {err}"
            break
        rows.append(payload[0])
        states.append(payload[1])
    w = config.basis.weights
    gaps = [float(np.sqrt(np.max(np.sum(w * np.abs(a - b) ** 2,
                                        axis=tuple(range(1, a.ndim))))))
            for a, b in zip(states, states[1:])]
    return SweepReport([r["epsilon"] for r in rows], gaps, rows, error)
