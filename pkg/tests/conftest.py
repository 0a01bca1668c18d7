import numpy as np
import pytest

from zksolver.domain import DomainSpec, build_domain, mode_field

CONFIGS = [
    DomainSpec(d=1, Nx=16, Nt1=8),
    DomainSpec(d=1, Nx=16, Nt1=8, transverse_bc="periodic"),
    DomainSpec(d=2, Nx=16, Nt1=8, Nt2=10),
    DomainSpec(d=2, Nx=16, Nt1=8, Nt2=8, transverse_bc="periodic"),
]


@pytest.fixture(params=CONFIGS, ids=lambda s: f"d{s.d}-{s.transverse_bc}")
def basis(request):
    return build_domain(request.param)


@pytest.fixture
def basis64():
    return build_domain(DomainSpec(d=1, Nx=64, Nt1=32))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def two_mode_ic(basis, A):
    """A [cos(2 pi x) phi_1 + 1/2 cos(2 pi x + 0.3) phi_2], extra index 1 when d = 2."""
    extra = (1,) if basis.spec.d == 2 else ()
    return (mode_field(basis, 1, 1, *extra, amplitude=A)
            + mode_field(basis, 1, 2, *extra, amplitude=A / 2, phase=0.3))
