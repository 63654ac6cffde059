import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hitchin_lab.phase_space import PhasePoint  # noqa: E402

TAUS = (1j, 0.5 + 0.8j)


def random_point(rng, N, tau=1j, spin=1.0, rank1=False):
    """Phase point with positions spread along the real period and off the real axis."""
    tau = complex(tau)
    u = np.arange(N) / N + 0.08 * rng.uniform(-1, 1, N) + 1j * tau.imag * rng.uniform(0.05, 0.35, N)
    w = rng.normal(size=N) + 0.3j * rng.normal(size=N)
    if rank1:
        a = rng.normal(size=N) + 1j * rng.normal(size=N)
        b = rng.normal(size=N) + 1j * rng.normal(size=N)
        p = np.outer(a, b)
    else:
        p = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    return PhasePoint(u, w, spin * p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=TAUS, ids=["tau=i", "tau=0.5+0.8i"])
def tau(request):
    return request.param
