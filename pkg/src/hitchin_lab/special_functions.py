r"""Jacobi theta functions, Weierstrass :math:`\wp` and the Eisenstein series E2.

Everything here is for the lattice :math:`\mathbb{Z} + \tau\mathbb{Z}` with
nome :math:`q = e^{2\pi i\tau}`.  Arguments are reduced to the rectangle
``|Re x| <= 1/2, |Im x| <= Im(tau)/2`` before any series is summed and the
quasi-periodicity factors are re-applied in closed form.

Conventions
-----------
* ``theta_paper(z) = sum_n exp(pi i (n^2 tau + 2 n z))``  (even theta, theta_3)
* ``theta1(z) = -i sum_n (-1)^n exp(pi i (n+1/2)^2 tau + (2n+1) pi i z)``
* ``wp(u) = -(log theta1)''(u) - (pi^2/3) E2(tau)``
"""

import cmath
import functools
import math
from dataclasses import dataclass, field
from math import comb

from .errors import InvalidModulus, NonConvergent, PoleAtLattice

PI = math.pi
TWO_PI_I = 2j * math.pi

#: distance (in reduced coordinates) below which a point counts as a lattice pole
POLE_GUARD = 1e-8


@dataclass(frozen=True)
class ModularParameter:
    """Curve modulus ``tau`` in the upper half plane, with nome ``q``."""

    tau: complex
    q: complex = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        tau = complex(self.tau)
        if not (tau.imag > 0) or not cmath.isfinite(tau):
            raise InvalidModulus(f"Im(tau) must be positive, got tau={tau!r}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "q", cmath.exp(TWO_PI_I * tau))


@dataclass(frozen=True)
class SeriesConfig:
    tol: float = 1e-14
    max_terms: int = 512

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_SERIES = SeriesConfig()


def as_modulus(m):
    """Accept a :class:`ModularParameter` or anything ``complex()`` understands."""
    if isinstance(m, ModularParameter):
        return m
    return ModularParameter(complex(m))


def reduce_argument(z, m):
    """Split ``z = x + a + b*tau`` with integers ``a, b`` and ``x`` in the centred cell.

    Returns ``(x, a, b)``.
    """
    m = as_modulus(m)
    z = complex(z)
    tau = m.tau
    b = round(z.imag / tau.imag)
    y = z - b * tau
    a = round(y.real)
    return y - a, a, b


def _theta1_reduced(x, tau, kmax, cfg):
    # Symmetric pairs n and -n-1 share |(n+1/2)^2 tau| and carry opposite frequencies.
    out = [0j] * (kmax + 1)
    small = 0
    n = 0
    while True:
        if n >= cfg.max_terms:
            raise NonConvergent(
                f"theta1 series did not reach tol={cfg.tol} within {cfg.max_terms} terms"
            )
        sign = -1.0 if n % 2 else 1.0
        base = cmath.exp(1j * PI * (n + 0.5) ** 2 * tau)
        freq = (2 * n + 1) * PI * 1j
        ep = sign * base * cmath.exp(freq * x)
        em = -sign * base * cmath.exp(-freq * x)
        fk = 1.0 + 0j
        for k in range(kmax + 1):
            out[k] += fk * ep + (-fk if k % 2 else fk) * em
            fk *= freq
        mag = (abs(ep) + abs(em)) * ((2 * n + 1) * PI) ** kmax
        small = small + 1 if mag < cfg.tol / 10 else 0
        n += 1
        if small >= 2:
            break
    return [-1j * v for v in out]


def _theta3_reduced(x, tau, cfg):
    total = 1.0 + 0j
    small = 0
    n = 1
    while True:
        if n >= cfg.max_terms:
            raise NonConvergent(
                f"theta series did not reach tol={cfg.tol} within {cfg.max_terms} terms"
            )
        base = cmath.exp(1j * PI * n * n * tau)
        ep = base * cmath.exp(TWO_PI_I * n * x)
        em = base * cmath.exp(-TWO_PI_I * n * x)
        total += ep + em
        small = small + 1 if abs(ep) + abs(em) < cfg.tol / 10 else 0
        n += 1
        if small >= 2:
            break
    return total


def theta_paper(zeta, m, cfg=DEFAULT_SERIES):
    """Even theta series ``sum_n exp(pi i (n^2 tau + 2 n zeta))``."""
    m = as_modulus(m)
    x, _a, b = reduce_argument(zeta, m)
    factor = cmath.exp(-1j * PI * b * b * m.tau - TWO_PI_I * b * x) if b else 1.0
    return factor * _theta3_reduced(x, m.tau, cfg)


def theta1_derivatives(zeta, m, kmax=0, cfg=DEFAULT_SERIES):
    """Return ``[theta1(zeta), theta1'(zeta), ..., theta1^(kmax)(zeta)]``.

    Uses ``theta1(x + a + b tau) = (-1)^(a+b) exp(-pi i b^2 tau - 2 pi i b x) theta1(x)``
    and the Leibniz rule for the derivatives of the prefactor.
    """
    m = as_modulus(m)
    x, a, b = reduce_argument(zeta, m)
    vals = _theta1_reduced(x, m.tau, kmax, cfg)
    if a == 0 and b == 0:
        return vals
    sign = -1.0 if (a + b) % 2 else 1.0
    beta = -TWO_PI_I * b
    pref = sign * cmath.exp(-1j * PI * b * b * m.tau + beta * x)
    return [
        pref * sum(comb(k, j) * beta ** (k - j) * vals[j] for j in range(k + 1))
        for k in range(kmax + 1)
    ]


def theta1(zeta, m, cfg=DEFAULT_SERIES):
    """Odd Jacobi theta function theta_1(zeta | tau)."""
    return theta1_derivatives(zeta, m, 0, cfg)[0]


def theta1_deriv(zeta, m, order=1, cfg=DEFAULT_SERIES):
    """``order``-th derivative (1, 2 or 3) of theta_1 in its first argument."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    return theta1_derivatives(zeta, m, order, cfg)[order]


@functools.lru_cache(maxsize=256)
def _theta1_prime_zero(tau, tol, max_terms):
    return _theta1_reduced(0j, tau, 1, SeriesConfig(tol, max_terms))[1]


def theta1_prime_zero(m, cfg=DEFAULT_SERIES):
    """theta_1'(0 | tau); cached per (tau, cfg)."""
    m = as_modulus(m)
    return _theta1_prime_zero(m.tau, cfg.tol, cfg.max_terms)


def _sigma1(n):
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d
            if d * d != n:
                total += n // d
        d += 1
    return total


@functools.lru_cache(maxsize=256)
def _e2(tau, tol, max_terms):
    q = cmath.exp(TWO_PI_I * tau)
    total = 0j
    qn = 1.0 + 0j
    small = 0
    for n in range(1, max_terms + 1):
        qn *= q
        term = _sigma1(n) * qn
        total += term
        small = small + 1 if 24 * abs(term) < tol / 10 else 0
        if small >= 2:
            return 1.0 - 24.0 * total
    raise NonConvergent(f"E2 series did not reach tol={tol} within {max_terms} terms")


def eisenstein_e2(m, cfg=DEFAULT_SERIES):
    """Normalized Eisenstein series ``E2 = 1 - 24 sum_{n>=1} sigma_1(n) q^n``."""
    m = as_modulus(m)
    return _e2(m.tau, cfg.tol, cfg.max_terms)


def _log_derivs(u, m, cfg, pole_guard, kmax):
    x, _a, _b = reduce_argument(u, m)
    if abs(x) < pole_guard:
        raise PoleAtLattice(f"argument {u!r} lies within {pole_guard} of the lattice")
    t = _theta1_reduced(x, m.tau, kmax, cfg)
    return [t[k] / t[0] for k in range(1, kmax + 1)]


def wp(u, m, cfg=DEFAULT_SERIES, pole_guard=POLE_GUARD):
    """Weierstrass P for the lattice Z + tau Z."""
    m = as_modulus(m)
    r1, r2 = _log_derivs(u, m, cfg, pole_guard, 2)
    return -(r2 - r1 * r1) - (PI * PI / 3.0) * eisenstein_e2(m, cfg)


def wp_deriv(u, m, cfg=DEFAULT_SERIES, pole_guard=POLE_GUARD):
    """Derivative of Weierstrass P, from the third log-derivative of theta_1."""
    m = as_modulus(m)
    r1, r2, r3 = _log_derivs(u, m, cfg, pole_guard, 3)
    return -(r3 - 3.0 * r1 * r2 + 2.0 * r1 ** 3)


def wp_and_deriv(u, m, cfg=DEFAULT_SERIES, pole_guard=POLE_GUARD):
    """``(wp(u), wp'(u))`` from a single series pass."""
    m = as_modulus(m)
    r1, r2, r3 = _log_derivs(u, m, cfg, pole_guard, 3)
    value = -(r2 - r1 * r1) - (PI * PI / 3.0) * eisenstein_e2(m, cfg)
    return value, -(r3 - 3.0 * r1 * r2 + 2.0 * r1 ** 3)
