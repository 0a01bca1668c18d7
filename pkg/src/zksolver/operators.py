"""ZK spatial operators acting on spectral fields.

Right-hand side of the regularized system, mode by mode::

    du/dt = (-sigma_disp - sigma_reg) u - N(u) + f

with ``sigma_disp = i xi (c - xi^2 - |mu|^2)`` (the symbol of
``Delta d/dx + c d/dx``), ``sigma_reg = eps (xi^4 + mu_y^4 + mu_z^4)`` and the
nonlinearity in conservative form ``N(u) = d/dx P(u^2 / 2)``, where ``P`` is
the exact L2 projection onto the basis span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .domain import (COS, EXP, SIN, Basis, SpectralField, apply_along, fft_workers,
                     project_dealias)
from .forcing import ForcingSpec

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class SolverParams:
    epsilon: float = 0.0
    c: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    dealias: bool = True
    forcing: ForcingSpec = field(default_factory=ForcingSpec)

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if not self.c > 0:
            raise ValueError("c must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if not self.dt < self.T:
            raise ValueError("dt must be smaller than T")


@dataclass(frozen=True, eq=False)
class LinearSymbol:
    basis: Basis
    dispersive: np.ndarray
    regularizing: np.ndarray

    @property
    def linear(self) -> np.ndarray:
        """Per-mode growth rate of du/dt = linear * u."""
        return -self.dispersive - self.regularizing


def linear_symbol(basis: Basis, params: SolverParams) -> LinearSymbol:
    xi = basis.bxi(odd=True)
    lap = basis.bxi() ** 2
    quart = basis.bxi() ** 4
    for i in range(len(basis.axes)):
        mu = basis.bmu(i)
        lap = lap + mu ** 2
        quart = quart + mu ** 4
    lap = np.broadcast_to(lap, basis.shape)
    disp = 1j * xi * (params.c - lap)
    reg = params.epsilon * np.broadcast_to(quart, basis.shape)
    return LinearSymbol(basis, np.broadcast_to(disp, basis.shape).copy(), reg.copy())


def diff(u: SpectralField, axis: str, order: int) -> SpectralField:
    """Exact modal derivative.

    Odd transverse derivatives of sine-type fields land in the companion
    cosine basis; the returned field's ``kinds`` records that.
    """
    if not 1 <= order <= 4:
        raise ValueError(f"derivative order must be 1..4, got {order}")
    basis = u.basis
    if axis not in AXES[: basis.ndim]:
        raise ValueError(f"axis {axis!r} invalid for d={basis.spec.d}")
    if axis == "x":
        return u.with_coeffs(u.coeffs * (1j * basis.bxi(odd=order % 2 == 1)) ** order)
    i = AXES.index(axis) - 1
    kind = u.kinds[i]
    mu = basis.bmu(i)
    kinds = list(u.kinds)
    if kind == EXP:
        mult = (1j * mu) ** order
        if order % 2:
            mult = np.where(basis.axes[i].nyquist.reshape(mu.shape), 0.0, mult)
        return u.with_coeffs(u.coeffs * mult)
    # d/ds sin = n cos, d/ds cos = -n sin
    sign = 1.0
    cur = kind
    for _ in range(order):
        if cur == SIN:
            cur = COS
        else:
            sign = -sign
            cur = SIN
    kinds[i] = cur
    return u.with_coeffs(sign * u.coeffs * mu ** order, tuple(kinds))


def _to_product_grid(c: np.ndarray, basis: Basis) -> np.ndarray:
    half = c[: basis.spec.Nx // 2 + 1]
    for i, ax in enumerate(basis.axes):
        half = apply_along(ax.product_synth, half, i + 1)
    return sfft.irfft(half * basis.spec.Nx, n=basis.spec.Nx, axis=0, workers=fft_workers())


def project_square(u: SpectralField) -> np.ndarray:
    """Half-spectrum (k >= 0) coefficients of P(u^2 / 2).

    Transverse projections are exact; in x the product is sampled on the
    collocation grid, so it is alias-free only for dealiased input.
    """
    basis = u.basis
    vals = _to_product_grid(u.coeffs, basis)
    g = 0.5 * vals * vals
    gh = sfft.rfft(g, axis=0, workers=fft_workers()) / basis.spec.Nx
    for i, ax in enumerate(basis.axes):
        gh = apply_along(ax.product_projection, gh, i + 1)
    return gh


def _full_from_half(half: np.ndarray, basis: Basis) -> np.ndarray:
    Nx = basis.spec.Nx
    full = np.zeros(basis.shape, dtype=complex)
    full[: Nx // 2 + 1] = half
    neg = np.conj(half[1: Nx // 2][::-1])
    # conjugate partner on periodic transverse axes sits at -j
    for i, ax in enumerate(basis.axes):
        if ax.bc != "dirichlet":
            neg = np.take(neg, (-np.arange(ax.N)) % ax.N, axis=i + 1)
    full[Nx // 2 + 1:] = neg
    return full


def nonlinear_term(u: SpectralField, dealias: bool = True) -> SpectralField:
    """Modal N(u) = d/dx P(u^2/2), the Galerkin projection of u u_x."""
    if any(k == COS for k in u.kinds):
        raise ValueError("nonlinear term needs a field in the admissible basis")
    basis = u.basis
    src = project_dealias(u) if dealias else u
    half = project_square(src)
    xi = basis.bxi(odd=True)[: basis.spec.Nx // 2 + 1]
    half = 1j * xi * half
    out = u.with_coeffs(_full_from_half(half, basis))
    return project_dealias(out) if dealias else out


def rhs(u: SpectralField, f: SpectralField | None, sym: LinearSymbol,
        dealias: bool = True, nonlinear: bool = True) -> SpectralField:
    if u.basis.spec != sym.basis.spec or (f is not None and f.basis.spec != u.basis.spec):
        raise ValueError("fields live on different domains")
    out = sym.linear * u.coeffs
    if nonlinear:
        out = out - nonlinear_term(u, dealias).coeffs
    if f is not None:
        out = out + f.coeffs
    return u.with_coeffs(out)
