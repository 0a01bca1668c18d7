"""Domain, modal basis and transforms for M = (0,1) x (-pi/2, pi/2)^d.

The x direction is periodic with period 1 and uses complex exponentials
``exp(2 pi i k x)``.  Each transverse direction uses either the shifted sine
family ``sin(n (y + pi/2))`` (Dirichlet walls) or exponentials
``exp(2 i j (y + pi/2))`` (period pi).  Throughout, ``s = y + pi/2`` is the
shifted transverse coordinate in ``(0, pi)``.

Normalization (used everywhere):

    u(x, s) = sum_k sum_n  c[k, n] exp(2 pi i k x) phi_n(s)

so ``forward(inverse(c)) == c`` and the L2 inner product is the modal form
``sum w |c|^2`` with per-mode weight ``w = prod(axis weights)``; the x weight
is 1, the sine weight pi/2, the periodic weight pi.

Nyquist modes (x index Nx/2, periodic transverse index N/2) are kept in the
coefficient arrays so that the collocation transforms are bijective, but they
are not part of the admissible span: they have no real-valued odd derivative.
Off-grid evaluations drop them and random admissible fields never contain
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import itertools
import os

import numpy as np
import scipy.fft as sfft

DIRICHLET = "dirichlet"
PERIODIC = "periodic"

# per-axis basis kinds carried by a SpectralField
SIN = "sin"
COS = "cos"  # companion basis produced by odd transverse derivatives
EXP = "exp"

X_LENGTH = 1.0
T_LENGTH = np.pi


def fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("ZK_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class DomainSpec:
    """Resolution and boundary flavour of the discretized domain."""

    d: int = 1
    Nx: int = 64
    Nt1: int = 32
    Nt2: int = 32
    transverse_bc: str = DIRICHLET

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d out of range: {self.d} (expected 1 or 2)")
        if self.Nx % 2:
            raise ValueError(f"Nx must be even, got {self.Nx}")
        sizes = [self.Nx, self.Nt1] + ([self.Nt2] if self.d == 2 else [])
        if min(sizes) < 8:
            raise ValueError(f"resolution must be >= 8 in every direction, got {sizes}")
        if self.transverse_bc not in (DIRICHLET, PERIODIC):
            raise ValueError(f"unknown transverse_bc {self.transverse_bc!r}")
        if self.transverse_bc == PERIODIC and any(n % 2 for n in sizes[1:]):
            raise ValueError("periodic transverse resolutions must be even")

    @property
    def transverse_sizes(self) -> tuple[int, ...]:
        return (self.Nt1,) if self.d == 1 else (self.Nt1, self.Nt2)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.Nx,) + self.transverse_sizes


def _signed_index(N: int) -> np.ndarray:
    """FFT-ordered integer wavenumbers with the Nyquist entry made positive."""
    k = np.fft.fftfreq(N, d=1.0 / N).astype(int)
    k[N // 2] = N // 2
    return k


def _reshape_axis(v: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = v.size
    return v.reshape(shape)


def apply_along(mat: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Contract ``mat`` (new, old) with ``arr`` along ``axis``."""
    out = np.tensordot(mat, arr, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


class TransverseAxis:
    """One transverse direction: mode table, nodes and transform matrices."""

    def __init__(self, N: int, bc: str):
        self.N = N
        self.bc = bc
        if bc == DIRICHLET:
            self.index = np.arange(1, N + 1)
            self.mu = self.index.astype(float)
            self.weight = T_LENGTH / 2
            # DST-I nodes
            self.nodes = np.arange(1, N + 1) * np.pi / (N + 1)
            self.keep = self.index <= (2 * N) // 3
            self.nyquist = np.zeros(N, dtype=bool)
        else:
            self.index = _signed_index(N)
            self.mu = 2.0 * self.index
            self.weight = T_LENGTH
            self.nodes = np.arange(N) * np.pi / N
            self.keep = np.abs(self.index) <= (N - 1) // 3
            self.nyquist = self.index == N // 2

    # -- collocation transforms (fast) ------------------------------------
    def forward(self, v: np.ndarray, axis: int) -> np.ndarray:
        if self.bc == DIRICHLET:
            return sfft.dst(v, type=1, axis=axis, workers=fft_workers()) / (self.N + 1)
        return sfft.fft(v, axis=axis, workers=fft_workers()) / self.N

    def inverse(self, c: np.ndarray, axis: int, kind: str = SIN) -> np.ndarray:
        if self.bc == PERIODIC:
            return sfft.ifft(c, axis=axis, workers=fft_workers()) * self.N
        if kind == SIN:
            return sfft.dst(c, type=1, axis=axis, workers=fft_workers()) / 2
        return apply_along(self.synth_matrix(self.nodes, COS), c, axis)

    # -- dense evaluation at arbitrary shifted nodes ----------------------
    def synth_matrix(self, s: np.ndarray, kind: str) -> np.ndarray:
        s = np.asarray(s, dtype=float)[:, None]
        if kind == SIN:
            return np.sin(self.index[None, :] * s)
        if kind == COS:
            return np.cos(self.index[None, :] * s)
        mat = np.exp(1j * self.mu[None, :] * s)
        mat[:, self.nyquist] = 0.0
        return mat

    # -- exact Galerkin projection of products -----------------------------
    @cached_property
    def product_nodes(self) -> np.ndarray:
        """Nodes on which squares of span fields are sampled exactly."""
        if self.bc == DIRICHLET:
            L = 2 * (self.N + 1)
            return np.arange(L + 1) * np.pi / L
        return np.arange(2 * self.N) * np.pi / (2 * self.N)

    @cached_property
    def product_synth(self) -> np.ndarray:
        kind = SIN if self.bc == DIRICHLET else EXP
        return self.synth_matrix(self.product_nodes, kind)

    @cached_property
    def product_projection(self) -> np.ndarray:
        """Matrix mapping node samples of a product to projected coefficients.

        Dirichlet: samples are those of a cosine polynomial of degree <= L
        (a product of two sine series).  The DCT-I recovers its cosine
        coefficients exactly and ``(2/pi) int_0^pi cos(m s) sin(n s) ds
        = (2/pi) 2n/(n^2-m^2)`` for odd n+m (zero otherwise) projects them.
        Periodic: plain discrete Fourier analysis on the doubled grid.
        """
        s = self.product_nodes
        if self.bc == PERIODIC:
            mat = np.exp(-1j * np.outer(self.mu, s)) / s.size
            mat[self.nyquist] = 0.0
            return mat
        L = s.size - 1
        m = np.arange(L + 1)
        cm = np.where((m == 0) | (m == L), 1.0, 2.0)
        trap = np.ones(L + 1)
        trap[[0, L]] = 0.5
        dct = (cm[:, None] / L) * np.cos(np.outer(m, s)) * trap[None, :]
        n = self.index[:, None].astype(float)
        mm = m[None, :].astype(float)
        odd = ((self.index[:, None] + m[None, :]) % 2) == 1
        with np.errstate(divide="ignore", invalid="ignore"):
            B = np.where(odd, (2.0 / np.pi) * 2.0 * n / (n * n - mm * mm), 0.0)
        return B @ dct


@dataclass(frozen=True, eq=False)
class Basis:
    """Wavenumber tables, nodes and masks for one DomainSpec."""

    spec: DomainSpec
    xi: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    axes: tuple[TransverseAxis, ...] = field(repr=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spec.shape

    @property
    def ndim(self) -> int:
        return 1 + self.spec.d

    @property
    def mu(self) -> tuple[np.ndarray, ...]:
        return tuple(ax.mu for ax in self.axes)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.spec.Nx) / self.spec.Nx

    @property
    def y_nodes(self) -> tuple[np.ndarray, ...]:
        return tuple(ax.nodes - np.pi / 2 for ax in self.axes)

    def grid(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(self.x, *self.y_nodes, indexing="ij"))

    def bxi(self, odd: bool = False) -> np.ndarray:
        """x-wavenumbers broadcast over the coefficient array.

        With ``odd`` the Nyquist entry is zeroed (odd derivatives of the
        Nyquist mode are not real-representable).
        """
        xi = self.xi.copy()
        if odd:
            xi[self.spec.Nx // 2] = 0.0
        return _reshape_axis(xi, 0, self.ndim)

    def bmu(self, i: int) -> np.ndarray:
        return _reshape_axis(self.axes[i].mu, i + 1, self.ndim)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(self.shape)
        for ax in self.axes:
            w = w * ax.weight
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = _reshape_axis(np.abs(self.k) <= (self.spec.Nx - 1) // 3, 0, self.ndim)
        for i, ax in enumerate(self.axes):
            keep = keep & _reshape_axis(ax.keep, i + 1, self.ndim)
        return np.broadcast_to(keep, self.shape)

    @cached_property
    def span_mask(self) -> np.ndarray:
        """Admissible span: everything except Nyquist modes."""
        keep = _reshape_axis(self.k != self.spec.Nx // 2, 0, self.ndim)
        for i, ax in enumerate(self.axes):
            keep = keep & _reshape_axis(~ax.nyquist, i + 1, self.ndim)
        return np.broadcast_to(keep, self.shape)

    @cached_property
    def conj_index(self) -> tuple[np.ndarray, ...]:
        """Index arrays mapping each mode to its conjugate partner."""
        idx = [(-np.arange(self.spec.Nx)) % self.spec.Nx]
        for ax in self.axes:
            if ax.bc == PERIODIC:
                idx.append((-np.arange(ax.N)) % ax.N)
            else:
                idx.append(np.arange(ax.N))
        return tuple(np.ix_(*idx))


@lru_cache(maxsize=32)
def build_domain(spec: DomainSpec) -> Basis:
    """Populate wavenumber/eigenvalue tables and node coordinates."""
    k = _signed_index(spec.Nx)
    axes = tuple(TransverseAxis(n, spec.transverse_bc) for n in spec.transverse_sizes)
    return Basis(spec=spec, xi=2 * np.pi * k.astype(float), k=k, axes=axes)


def default_kinds(basis: Basis) -> tuple[str, ...]:
    return tuple(SIN if ax.bc == DIRICHLET else EXP for ax in basis.axes)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Modal coefficients of a real field; ``kinds`` tags each transverse axis."""

    coeffs: np.ndarray
    basis: Basis
    kinds: tuple[str, ...] = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.basis.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match domain {self.basis.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.kinds is None:
            object.__setattr__(self, "kinds", default_kinds(self.basis))

    def with_coeffs(self, coeffs: np.ndarray, kinds=None) -> "SpectralField":
        return SpectralField(coeffs, self.basis, self.kinds if kinds is None else kinds)

    def _check(self, other: "SpectralField"):
        if other.basis.spec != self.basis.spec:
            raise ValueError("fields live on different domains")
        if other.kinds != self.kinds:
            raise ValueError(f"basis kinds differ: {self.kinds} vs {other.kinds}")

    def __add__(self, other):
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, a):
        return self.with_coeffs(self.coeffs * a)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    @classmethod
    def zeros(cls, basis: Basis) -> "SpectralField":
        return cls(np.zeros(basis.shape, dtype=complex), basis)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real collocation values on the tensor grid."""

    values: np.ndarray
    basis: Basis

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.basis.shape:
            raise ValueError(f"value shape {v.shape} does not match domain {self.basis.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def enforce_real(coeffs: np.ndarray, basis: Basis) -> np.ndarray:
    """Project coefficients onto the conjugate-symmetric (real field) subspace."""
    return 0.5 * (coeffs + np.conj(coeffs[basis.conj_index]))


def forward_transform(u: PhysicalField) -> SpectralField:
    basis = u.basis
    c = sfft.fft(u.values, axis=0, workers=fft_workers()) / basis.spec.Nx
    for i, ax in enumerate(basis.axes):
        c = ax.forward(c, i + 1)
    return SpectralField(c, basis)


def inverse_transform(u: SpectralField) -> PhysicalField:
    basis = u.basis
    c = u.coeffs
    for i, ax in enumerate(basis.axes):
        c = ax.inverse(c, i + 1, u.kinds[i])
    v = sfft.ifft(c, axis=0, workers=fft_workers()) * basis.spec.Nx
    return PhysicalField(v.real, basis)


def project_dealias(u: SpectralField) -> SpectralField:
    return u.with_coeffs(np.where(u.basis.dealias_mask, u.coeffs, 0.0))


def modal_inner(u: SpectralField, v: SpectralField) -> float:
    """L2 inner product evaluated as the modal quadratic form."""
    return float(np.real(np.sum(u.basis.weights * u.coeffs * np.conj(v.coeffs))))


def x_mean(u: SpectralField) -> np.ndarray:
    """Transverse coefficients of the x-average (the k = 0 slice)."""
    return np.array(u.coeffs[0])


# -- boundary traces -----------------------------------------------------

_FACES = {"x0": (0, 0.0), "x1": (0, 1.0), "y-": (1, 0.0), "y+": (1, np.pi),
          "z-": (2, 0.0), "z+": (2, np.pi)}


def _sin_derivative_at(index: np.ndarray, order: int, s: float) -> np.ndarray:
    """d^j/ds^j sin(n s) at s in {0, pi}, evaluated without roundoff."""
    phase = [0.0, 1.0, 0.0, -1.0][order % 4]
    sign = 1.0 if s == 0.0 else np.where(index % 2 == 0, 1.0, -1.0)
    return index.astype(float) ** order * phase * sign


def _cos_derivative_at(index: np.ndarray, order: int, s: float) -> np.ndarray:
    phase = [1.0, 0.0, -1.0, 0.0][order % 4]
    sign = 1.0 if s == 0.0 else np.where(index % 2 == 0, 1.0, -1.0)
    return index.astype(float) ** order * phase * sign


def boundary_trace(u: SpectralField, face: str, derivative: int = 0) -> np.ndarray:
    """Values of the face-normal derivative of ``u`` on one face.

    The result is sampled on the collocation nodes of the remaining
    directions.  x-faces are evaluated separately at x = 0 and x = 1.
    """
    if face not in _FACES:
        raise ValueError(f"unknown face {face!r}")
    if not 0 <= derivative <= 3:
        raise ValueError("derivative order must be in 0..3")
    axis, where = _FACES[face]
    basis = u.basis
    if axis > basis.spec.d:
        raise ValueError(f"face {face!r} inconsistent with d={basis.spec.d}")
    c = u.coeffs
    if axis == 0:
        mult = (1j * basis.bxi(odd=derivative % 2 == 1)) ** derivative
        phase = np.exp(2j * np.pi * basis.k * where) if where else np.ones(basis.spec.Nx)
        phase = _reshape_axis(phase, 0, basis.ndim)
        slab = np.sum(c * mult * phase, axis=0)
        for i, ax in enumerate(basis.axes):
            slab = ax.inverse(slab, i, u.kinds[i])
        return np.real(slab)
    ax = basis.axes[axis - 1]
    kind = u.kinds[axis - 1]
    if kind == SIN:
        vec = _sin_derivative_at(ax.index, derivative, where)
    elif kind == COS:
        vec = _cos_derivative_at(ax.index, derivative, where)
    else:
        mult = (1j * ax.mu) ** derivative
        if derivative % 2:
            mult[ax.nyquist] = 0
        vec = mult * np.exp(1j * ax.mu * where)
    slab = np.tensordot(c, vec, axes=([axis], [0]))
    # remaining transverse axes (d = 2)
    for i, other in enumerate(basis.axes):
        if i + 1 == axis:
            continue
        slab = other.inverse(slab, 1, u.kinds[i])
    slab = sfft.ifft(slab, axis=0) * basis.spec.Nx
    return np.real(slab)


# -- field constructors --------------------------------------------------

def mode_field(basis: Basis, k: int, n: int, m: int | None = None, amplitude: float = 1.0,
               phase: float = 0.0) -> SpectralField:
    """Real field ``amplitude * cos(2 pi k x + phase) * phi_n(y) [* phi_m(z)]``.

    For periodic transverse axes ``phi_n(s) = cos(2 n s)``.
    """
    c = np.zeros(basis.shape, dtype=complex)
    idx_t = []
    for ax, q in zip(basis.axes, [n] + ([m] if basis.spec.d == 2 else [])):
        if q is None:
            raise ValueError("mode index missing for d=2")
        if ax.bc == DIRICHLET:
            if not 1 <= q <= ax.N:
                raise ValueError(f"sine index {q} out of range 1..{ax.N}")
            idx_t.append([(q - 1, 1.0)])
        else:
            if abs(q) >= ax.N // 2:
                raise ValueError(f"periodic index {q} outside span")
            idx_t.append([(q % ax.N, 0.5), ((-q) % ax.N, 0.5)] if q else [(0, 1.0)])
    Nx = basis.spec.Nx
    if abs(k) >= Nx // 2:
        raise ValueError(f"x index {k} outside span")
    xparts = [(k % Nx, 0.5 * np.exp(1j * phase)), ((-k) % Nx, 0.5 * np.exp(-1j * phase))] if k else [(0, np.cos(phase))]
    for (ix, ax_amp) in xparts:
        for combo in itertools.product(*idx_t):
            idx = (ix,) + tuple(j for j, _ in combo)
            c[idx] += amplitude * ax_amp * np.prod([a for _, a in combo])
    return SpectralField(c, basis)


def random_field(basis: Basis, rng: np.random.Generator, *, decay: float = 3.0,
                 mean_free: bool = False, dealiased: bool = False) -> SpectralField:
    """Random real admissible field with amplitudes ~ (1 + |k| + |n| [+ |m|])^-decay."""
    size = np.abs(_reshape_axis(basis.k, 0, basis.ndim)).astype(float)
    for i, ax in enumerate(basis.axes):
        size = size + np.abs(_reshape_axis(ax.index, i + 1, basis.ndim))
    amp = (1.0 + size) ** (-decay)
    c = (rng.standard_normal(basis.shape) + 1j * rng.standard_normal(basis.shape)) * amp
    c = np.where(basis.span_mask, c, 0.0)
    if mean_free:
        c[0] = 0.0
    if dealiased:
        c = np.where(basis.dealias_mask, c, 0.0)
    return SpectralField(enforce_real(c, basis), basis)
