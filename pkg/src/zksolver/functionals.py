"""Norms, seminorms and energy functionals.

Quadratic quantities use the modal (Parseval) form, which is exact on the
span.  Integer powers of the field integrate exactly on an oversampled grid;
``|u|^3`` is not polynomial and is refined until the result settles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import SpectralField, x_mean  # noqa: F401  (x_mean re-exported)
from .quadrature import EVEN, QuadGrid, parity_of


@dataclass(frozen=True)
class NormReport:
    l2: float
    grad_l2: float
    semi2: float
    l3: float
    l4: float
    l6: float
    h2_full: float


@dataclass(frozen=True)
class EnergyReport:
    E1: float
    cubic: float
    kappa0: float


def _modal_sum(u: SpectralField, mult) -> float:
    return float(np.sum(u.basis.weights * mult * np.abs(u.coeffs) ** 2))


def _sym_tables(u: SpectralField):
    b = u.basis
    xi2 = b.bxi() ** 2
    mu2 = [b.bmu(i) ** 2 for i in range(len(b.axes))]
    return xi2, mu2


def l2_norm(u: SpectralField) -> float:
    return float(np.sqrt(_modal_sum(u, 1.0)))


def grad_sq(u: SpectralField) -> float:
    xi2, mu2 = _sym_tables(u)
    return _modal_sum(u, xi2 + sum(mu2))


def grad_l2(u: SpectralField) -> float:
    return float(np.sqrt(grad_sq(u)))


def seminorm2_sq(u: SpectralField) -> float:
    """[u]_2^2 = |u_xx|^2 + |u_yy|^2 (+ |u_zz|^2)."""
    xi2, mu2 = _sym_tables(u)
    return _modal_sum(u, xi2 ** 2 + sum(m * m for m in mu2))


def seminorm2(u: SpectralField) -> float:
    return float(np.sqrt(seminorm2_sq(u)))


def grad_seminorm2_sq(u: SpectralField) -> float:
    """[grad u]_2^2, the dissipation rate in the H1 balance."""
    xi2, mu2 = _sym_tables(u)
    return _modal_sum(u, (xi2 + sum(mu2)) * (xi2 ** 2 + sum(m * m for m in mu2)))


def mixed_sq(u: SpectralField) -> float:
    """Sum of squared L2 norms of the mixed second derivatives."""
    xi2, mu2 = _sym_tables(u)
    out = xi2 * sum(mu2)
    if len(mu2) == 2:
        out = out + mu2[0] * mu2[1]
    return _modal_sum(u, out)


def h2_sq(u: SpectralField) -> float:
    """Full H2 norm squared, summing each multi-index once."""
    return l2_norm(u) ** 2 + grad_sq(u) + seminorm2_sq(u) + mixed_sq(u)


def dx_sq(u: SpectralField, order: int) -> float:
    """|d^order u / dx^order|^2."""
    xi2, _ = _sym_tables(u)
    return _modal_sum(u, xi2 ** order)


def signed_power_integral(u: SpectralField, p: int) -> float:
    """Exact int u^p for integer p (u in the span)."""
    q = max(2, p)
    grid = QuadGrid(u.basis, q)
    v = grid.values(u)
    return grid.integrate(v ** p, parity_of(u, powers=[p]))


def cubic(u: SpectralField) -> float:
    return signed_power_integral(u, 3)


def abs_cube_integral(u: SpectralField, rtol: float = 1e-8, q_max: int = 64) -> float:
    """int |u|^3 by grid refinement until successive values agree to rtol."""
    prev = None
    q = 2
    while True:
        grid = QuadGrid(u.basis, q)
        val = grid.integrate(np.abs(grid.values(u)) ** 3, (EVEN,) * len(u.basis.axes))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        if q >= q_max:
            return val
        prev = val
        q *= 2


def lp_norm(u: SpectralField, p: int) -> float:
    if p == 3:
        return abs_cube_integral(u) ** (1.0 / 3.0)
    if p in (4, 6):
        return max(signed_power_integral(u, p), 0.0) ** (1.0 / p)
    raise ValueError(f"unsupported p={p}; expected 3, 4 or 6")


def norm_report(u: SpectralField) -> NormReport:
    return NormReport(l2=l2_norm(u), grad_l2=grad_l2(u), semi2=seminorm2(u), l3=lp_norm(u, 3),
                      l4=lp_norm(u, 4), l6=lp_norm(u, 6), h2_full=float(np.sqrt(h2_sq(u))))


def e1_value(u: SpectralField) -> float:
    """1/2 |grad u|^2 - 1/6 int u^3."""
    return 0.5 * grad_sq(u) - cubic(u) / 6.0


def energy_E1(u: SpectralField, u0: SpectralField | None = None) -> EnergyReport:
    cub = cubic(u)
    e1 = 0.5 * grad_sq(u) - cub / 6.0
    kappa0 = e1 if u0 is None else e1_value(u0)
    return EnergyReport(E1=e1, cubic=cub, kappa0=kappa0)


def mean_l2(ubar: np.ndarray, u: SpectralField) -> float:
    """L2(I_perp) norm of a transverse coefficient slab."""
    w = u.basis.weights[0]
    return float(np.sqrt(np.sum(w * np.abs(ubar) ** 2)))
