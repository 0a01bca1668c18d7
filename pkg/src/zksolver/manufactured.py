"""Manufactured-solution catalog.

Every entry is ``u*(t) = sum_i a_i(t) phi_i`` with ``phi_i`` real basis
modes.  The forcing is assembled so that ``u*`` solves the semidiscrete
(Galerkin) system exactly::

    f = u*_t - L u* + P(u* u*_x)

``P(u* u*_x)`` is expanded bilinearly, ``sum_{i<=j} a_i a_j Q_ij``, so the
forcing is a finite sum of static fields times scalar functions of time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import Basis, SpectralField, mode_field
from .forcing import Forcing, ForcingTerm
from .operators import SolverParams, linear_symbol, nonlinear_term


@dataclass(frozen=True)
class _Amp:
    """a(t) = A (1 + r sin(w t)) and its derivative."""

    A: float
    r: float = 0.0
    w: float = 2 * np.pi

    def __call__(self, t):
        return self.A * (1.0 + self.r * np.sin(self.w * t))

    def d(self, t):
        return self.A * self.r * self.w * np.cos(self.w * t)


# id -> (default amplitude, list of ((k, n), relative amplitude, modulation depth))
CATALOG = {
    "linear-k1n1": (1e-8, [((1, 1), 1.0, 0.5)]),
    "steady": (1.0, [((1, 1), 1.0, 0.0)]),
    "nonlinear-moderate": (0.05, [((1, 1), 1.0, 0.5), ((2, 1), 0.5, 0.25)]),
}


@dataclass
class ManufacturedCase:
    name: str
    basis: Basis
    modes: list[SpectralField]
    amps: list[_Amp]
    forcing: Forcing
    params: SolverParams

    def exact(self, t: float) -> SpectralField:
        out = SpectralField.zeros(self.basis)
        for a, phi in zip(self.amps, self.modes):
            out = out + phi * a(t)
        return out

    def exact_rate(self, t: float) -> SpectralField:
        out = SpectralField.zeros(self.basis)
        for a, phi in zip(self.amps, self.modes):
            out = out + phi * a.d(t)
        return out


def _mode(basis: Basis, k: int, n: int) -> SpectralField:
    if basis.spec.d == 2:
        return mode_field(basis, k, n, 1)
    return mode_field(basis, k, n)


def _product(f: Callable, g: Callable) -> Callable:
    return lambda t: f(t) * g(t)


def manufactured_case(case_id: str, basis: Basis, *, epsilon: float = 0.0, c: float = 1.0,
                      dealias: bool = True, amplitude: float | None = None) -> ManufacturedCase:
    """Closed-form solution and the forcing that makes it exact."""
    if case_id not in CATALOG:
        raise KeyError(f"unknown manufactured case {case_id!r}; known: {sorted(CATALOG)}")
    base, entries = CATALOG[case_id]
    A = base if amplitude is None else amplitude
    params = SolverParams(epsilon=epsilon, c=c, dealias=dealias)
    sym = linear_symbol(basis, params)
    modes = [_mode(basis, *kn) for kn, _, _ in entries]
    amps = [_Amp(A * rel, depth) for _, rel, depth in entries]

    terms = []
    for a, phi in zip(amps, modes):
        lin = -sym.linear * phi.coeffs
        # a'(t) phi - a(t) L phi
        terms.append(ForcingTerm(np.array(phi.coeffs), a.d,
                                 lambda t, a=a: a.w * a.w * -a.A * a.r * np.sin(a.w * t)))
        terms.append(ForcingTerm(np.array(lin), a, a.d))
    for i in range(len(modes)):
        for j in range(i, len(modes)):
            if i == j:
                q = nonlinear_term(modes[i], dealias).coeffs
            else:
                q = (nonlinear_term(modes[i] + modes[j], dealias).coeffs
                     - nonlinear_term(modes[i], dealias).coeffs
                     - nonlinear_term(modes[j], dealias).coeffs)
            ai, aj = amps[i], amps[j]
            g = _product(ai, aj)
            dg = (lambda t, ai=ai, aj=aj: ai.d(t) * aj(t) + ai(t) * aj.d(t))
            terms.append(ForcingTerm(np.array(q), g, dg))
    forcing = Forcing(basis, [t for t in terms if np.any(t.coeffs)])
    return ManufacturedCase(case_id, basis, modes, amps, forcing, params)


@dataclass
class MMSReport:
    case: str
    dts: list[float]
    errors: list[float]
    pair_orders: list[float]
    fitted_order: float
    span_error: float
    semidiscrete_residual: float
    mean_residual: float = 0.0  # worst mean-law mismatch over all runs

    def table(self) -> str:
        lines = [f"case {self.case}", f"{'dt':>12} {'error':>14} {'order':>8}"]
        for i, (dt, err) in enumerate(zip(self.dts, self.errors)):
            order = f"{self.pair_orders[i - 1]:8.3f}" if i else f"{'':>8}"
            lines.append(f"{dt:12.4e} {err:14.6e} {order}")
        lines.append(f"fitted order {self.fitted_order:.3f}")
        lines.append(f"span truncation error {self.span_error:.3e}")
        lines.append(f"semidiscrete residual {self.semidiscrete_residual:.3e}")
        lines.append(f"mean-law residual {self.mean_residual:.3e}")
        return "\n".join(lines)


def span_error(case: ManufacturedCase, t: float) -> float:
    """Max-norm gap between the closed form sampled on the grid and the
    transform of those samples, relative to the field size."""
    from .domain import PhysicalField, forward_transform, inverse_transform

    basis = case.basis
    grid = basis.grid()
    x, ys = grid[0], grid[1:]
    vals = np.zeros(basis.shape)
    for (kn, _, _), a in zip(CATALOG[case.name][1], case.amps):
        k, n = kn
        v = a(t) * np.cos(2 * np.pi * k * x) * _phi(basis, 0, n, ys[0])
        if basis.spec.d == 2:
            v = v * _phi(basis, 1, 1, ys[1])
        vals = vals + v
    coeffs = forward_transform(PhysicalField(vals, basis))
    diff = np.max(np.abs(coeffs.coeffs - case.exact(t).coeffs))
    back = np.max(np.abs(inverse_transform(case.exact(t)).values - vals))
    size = max(np.max(np.abs(vals)), 1e-300)
    return float(max(diff, back) / size)


def _phi(basis: Basis, axis: int, n: int, y: np.ndarray) -> np.ndarray:
    if basis.axes[axis].bc == "dirichlet":
        return np.sin(n * (y + np.pi / 2))
    return np.cos(2 * n * (y + np.pi / 2))


def semidiscrete_residual(case: ManufacturedCase, times=(0.0, 0.25, 0.5, 0.75, 1.0)) -> float:
    """max_t |u*_t - rhs(u*, f)| / |u*_t| + |rhs| scale; zero when u* is exact."""
    from .operators import rhs

    dealias = case.params.dealias
    sym = linear_symbol(case.basis, case.params)
    worst = 0.0
    for t in times:
        u = case.exact(t)
        r = rhs(u, case.forcing(t), sym, dealias)
        gap = np.max(np.abs(case.exact_rate(t).coeffs - r.coeffs))
        scale = max(np.max(np.abs(sym.linear * u.coeffs)), np.max(np.abs(r.coeffs)), 1e-300)
        worst = max(worst, float(gap / scale))
    return worst


def mms_study(case_id: str, basis: Basis, dts=(4e-3, 2e-3, 1e-3, 5e-4), T: float = 1.0,
              epsilon: float = 0.0, c: float = 1.0, amplitude: float | None = None) -> MMSReport:
    """Temporal convergence against a catalog solution.

    The observed order is the least-squares slope of log(error) against
    log(dt) over all step sizes; pairwise orders are reported alongside.
    """
    from . import functionals as fn
    from .timestepper import run

    case = manufactured_case(case_id, basis, epsilon=epsilon, c=c, amplitude=amplitude)
    errors, mean_res = [], 0.0
    for dt in dts:
        params = SolverParams(epsilon=epsilon, c=c, dt=dt, T=T)
        tr = run(case.exact(0.0), params, cadence=10 ** 9, forcing=case.forcing)
        errors.append(fn.l2_norm(tr.final.u - case.exact(tr.final.t)))
        mean_res = max(mean_res, float(tr.column("mean_residual").max()))
    d, e = np.log(np.array(dts)), np.log(np.array(errors))
    pair = [float(np.log(errors[i] / errors[i + 1]) / np.log(dts[i] / dts[i + 1]))
            for i in range(len(dts) - 1)]
    fitted = float(np.polyfit(d, e, 1)[0]) if len(dts) > 1 else float("nan")
    return MMSReport(case_id, list(dts), errors, pair, fitted, span_error(case, T),
                     semidiscrete_residual(case, times=tuple(np.linspace(0, T, 5))), mean_res)
