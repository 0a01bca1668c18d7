"""Forcing descriptors and their realization as time-dependent modal fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import Basis, SpectralField, mode_field

ZERO = "zero"
MODAL = "modal"
MANUFACTURED = "manufactured"


@dataclass(frozen=True)
class ForcingSpec:
    """What forcing to apply.

    ``modes`` entries are ``((k, n[, m]), amplitude, frequency)`` and stand for
    ``amplitude * cos(frequency * t) * cos(2 pi k x) phi_n(y) [phi_m(z)]``.
    ``case`` names a manufactured-solution catalog entry.
    """

    kind: str = ZERO
    modes: tuple = ()
    case: str | None = None
    amplitude: float | None = None

    def __post_init__(self):
        if self.kind not in (ZERO, MODAL, MANUFACTURED):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind == MANUFACTURED and not self.case:
            raise ValueError("manufactured forcing needs a case id")


@dataclass
class ForcingTerm:
    """``g(t) * field`` with optional closed forms for g', and the damped
    integral ``int_0^t exp(-lam (t - s)) g(s) ds``."""

    coeffs: np.ndarray
    g: Callable[[float], float]
    dg: Callable[[float], float]
    damped_integral: Callable[[np.ndarray, float], np.ndarray] | None = None


def _cos_term(coeffs, omega):
    def damped(lam, t):
        lam = np.asarray(lam, dtype=float)
        if omega == 0.0:
            out = np.full(lam.shape, float(t))
            nz = lam > 0
            out[nz] = -np.expm1(-lam[nz] * t) / lam[nz]
            return out
        den = lam * lam + omega * omega
        return (lam * np.cos(omega * t) + omega * np.sin(omega * t) - lam * np.exp(-lam * t)) / den

    return ForcingTerm(coeffs, lambda t: np.cos(omega * t), lambda t: -omega * np.sin(omega * t),
                       damped)


@dataclass
class Forcing:
    """Realized forcing f(t) = sum_i g_i(t) F_i on one basis."""

    basis: Basis
    terms: list[ForcingTerm] = field(default_factory=list)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coeffs(self, t: float) -> np.ndarray:
        out = np.zeros(self.basis.shape, dtype=complex)
        for term in self.terms:
            out = out + term.g(t) * term.coeffs
        return out

    def __call__(self, t: float) -> SpectralField:
        return SpectralField(self.coeffs(t), self.basis)

    def derivative(self, t: float) -> np.ndarray:
        out = np.zeros(self.basis.shape, dtype=complex)
        for term in self.terms:
            out = out + term.dg(t) * term.coeffs
        return out

    def mean_response(self, decay: np.ndarray, t: float) -> np.ndarray:
        """``int_0^t exp(-decay (t-s)) fbar(s) ds`` on the k = 0 slice."""
        out = np.zeros(self.basis.shape[1:], dtype=complex)
        for term in self.terms:
            fbar = term.coeffs[0]
            if not np.any(fbar):
                continue
            if term.damped_integral is None:
                raise NotImplementedError("forcing term has no closed-form mean integral")
            out = out + fbar * term.damped_integral(decay, t)
        return out


def build_forcing(spec: ForcingSpec | None, basis: Basis, epsilon: float = 0.0,
                  c: float = 1.0, dealias: bool = True) -> Forcing:
    if spec is None or spec.kind == ZERO:
        return Forcing(basis)
    if spec.kind == MODAL:
        terms = []
        for mode, amplitude, frequency in spec.modes:
            fld = mode_field(basis, *mode, amplitude=amplitude)
            terms.append(_cos_term(np.array(fld.coeffs), float(frequency)))
        return Forcing(basis, terms)
    from .manufactured import manufactured_case

    case = manufactured_case(spec.case, basis, epsilon=epsilon, c=c, dealias=dealias,
                             amplitude=spec.amplitude)
    return case.forcing
