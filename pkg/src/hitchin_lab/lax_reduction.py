r"""Lax matrix of the spin elliptic Calogero system and the quantities built on it.

The Lax matrix at spectral point ``zeta`` (``z = exp(2 pi i zeta)``) is

    eta_jj = w_j
    eta_jk = p_jk * (-1 / 2 pi i) * theta1(u_jk - zeta) theta1'(0) / (theta1(u_jk) theta1(zeta))

with ``u_jk = u_j - u_k``.  It is 1-periodic in ``zeta`` and twisted under
``zeta -> zeta + tau``:

    eta(zeta + tau) = T eta(zeta) T^-1,     T = diag(exp(2 pi i u_j)).

On the annulus ``|q| < |z| < 1`` it has the Laurent expansion

    eta_jk(z) = sum_n  p_jk / (1 - q^n exp(2 pi i (u_k - u_j)))  z^n,

which :func:`solve_moment_fourier` produces mode by mode.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    CollidingPositions,
    ContourThroughPole,
    InvalidConfig,
    Resonance,
    SpectralPole,
)
from .phase_space import OrbitData, PhasePoint
from .special_functions import (
    DEFAULT_SERIES,
    POLE_GUARD,
    ModularParameter,
    as_modulus,
    eisenstein_e2,
    reduce_argument,
    theta1,
    theta1_prime_zero,
    wp,
)

TWO_PI_I = 2j * math.pi
RESONANCE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LaxSample:
    zeta: complex
    matrix: np.ndarray


@dataclass(frozen=True)
class MarkedCurve:
    """Elliptic curve ``C* / q^Z`` with the marked point ``z = 1`` carrying an orbit."""

    m: ModularParameter
    orbit: Optional[OrbitData] = None
    marked_point: complex = field(default=1.0 + 0j, init=False)


def _check_positions(u, m, pole_guard):
    N = len(u)
    for j in range(N):
        for k in range(j + 1, N):
            x, _, _ = reduce_argument(u[j] - u[k], m)
            if abs(x) < pole_guard:
                raise CollidingPositions(
                    f"u[{j}] - u[{k}] = {u[j] - u[k]} lies on the lattice", pair=(j, k)
                )


def _check_spectral(zeta, m, pole_guard):
    x, _, _ = reduce_argument(zeta, m)
    if abs(x) < pole_guard:
        raise SpectralPole(f"spectral parameter {zeta} lies on the lattice")


def lax_array(u, w, p, zeta, m, cfg=DEFAULT_SERIES):
    """Lax matrix from raw arrays; ``p`` is used as given (diagonal ignored)."""
    u = np.asarray(u, dtype=complex)
    p = np.asarray(p, dtype=complex)
    N = u.size
    mat = np.diag(np.asarray(w, dtype=complex))
    pref = -theta1_prime_zero(m, cfg) / (TWO_PI_I * theta1(zeta, m, cfg))
    for j in range(N):
        for k in range(N):
            if j == k or p[j, k] == 0:
                continue
            ujk = u[j] - u[k]
            mat[j, k] = p[j, k] * pref * theta1(ujk - zeta, m, cfg) / theta1(ujk, m, cfg)
    return mat


def lax_matrix(x, zeta, m, cfg=DEFAULT_SERIES, pole_guard=POLE_GUARD):
    """Lax matrix ``eta(zeta)`` at the phase point ``x``."""
    m = as_modulus(m)
    zeta = complex(zeta)
    _check_spectral(zeta, m, pole_guard)
    _check_positions(x.u, m, pole_guard)
    return LaxSample(zeta, lax_array(x.u, x.w, x.p, zeta, m, cfg))


def hamiltonian_value(u, w, p, m, cfg=DEFAULT_SERIES):
    """Hamiltonian from raw arrays (no reduced-surface projection, no collision check)."""
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=complex)
    p = np.asarray(p, dtype=complex)
    N = u.size
    pot = 0j
    for j in range(N):
        for k in range(j + 1, N):
            pot += 2 * p[j, k] * p[k, j] * wp(u[j] - u[k], m, cfg)
    pot += N * (N - 1) * eisenstein_e2(m, cfg)
    return complex(0.5 * (np.sum(w * w) + pot / (4 * math.pi ** 2)))


def hamiltonian(x, m, cfg=DEFAULT_SERIES):
    """Spin elliptic Calogero Hamiltonian

        H = 1/2 ( w.w + 1/(4 pi^2) sum_{j != k} [ p_jk p_kj wp(u_j - u_k) + E2 ] ).

    The pair sum runs over ordered pairs, which makes ``H`` generate the
    isospectral flow of :func:`lax_matrix` under the bracket of ``phase_space``.
    """
    m = as_modulus(m)
    _check_positions(x.u, m, POLE_GUARD)
    return hamiltonian_value(x.u, x.w, x.p, m, cfg)


def spectral_invariant(x, zeta, j, m, cfg=DEFAULT_SERIES):
    """``tr eta(zeta)^j``."""
    eta = lax_matrix(x, zeta, m, cfg).matrix
    return complex(np.trace(np.linalg.matrix_power(eta, j)))


def _nu_values(nu, zetas):
    if nu is None:
        return np.ones(len(zetas), dtype=complex)
    if callable(nu):
        return np.array([nu(z) for z in zetas], dtype=complex)
    z = np.exp(TWO_PI_I * np.asarray(zetas))
    out = np.zeros(len(zetas), dtype=complex)
    for power in sorted(nu):
        out += nu[power] * z ** power
    return out


def hitchin_integral(x, j, m, nu=None, contour_im=None, M=128, cfg=DEFAULT_SERIES, pole_guard=POLE_GUARD):
    """Trapezoidal rule for ``int_0^1 nu(zeta) tr eta(zeta)^j dRe(zeta)`` on ``Im zeta = contour_im``.

    ``nu`` is ``None`` (constant 1), a mapping ``{power: coeff}`` for the
    Laurent polynomial ``sum coeff z^power`` in ``z = exp(2 pi i zeta)``, or a
    callable of ``zeta``.  The contour defaults to ``Im tau / 2``.
    """
    m = as_modulus(m)
    if M < 1:
        raise InvalidConfig("M must be positive")
    if contour_im is None:
        contour_im = m.tau.imag / 2
    if not 0 < contour_im < m.tau.imag:
        raise ContourThroughPole(
            f"contour Im(zeta)={contour_im} must lie strictly between 0 and Im(tau)={m.tau.imag}"
        )
    zetas = np.arange(M) / M + 1j * contour_im
    for z in zetas:
        xr, _, _ = reduce_argument(z, m)
        if abs(xr) < pole_guard:
            raise ContourThroughPole(f"quadrature node {z} hits a pole")
    weights = _nu_values(nu, zetas)
    total = 0j
    for z, wgt in zip(zetas, weights):
        total += wgt * spectral_invariant(x, z, j, m, cfg)
    return total / M


def twist_matrix(u):
    return np.diag(np.exp(TWO_PI_I * np.asarray(u, dtype=complex)))


def twist_residual(eta_shifted, eta, u):
    """Frobenius norm of ``eta(zeta + tau) - T eta(zeta) T^-1``."""
    u = np.asarray(u, dtype=complex)
    conj = eta * np.exp(TWO_PI_I * (u[:, None] - u[None, :]))
    return float(np.linalg.norm(eta_shifted - conj))


def moment_residual(x, zeta, m, cfg=DEFAULT_SERIES):
    """Residual of the twisted-periodicity (zero moment) condition at ``zeta``."""
    m = as_modulus(m)
    eta = lax_matrix(x, zeta, m, cfg).matrix
    eta_shifted = lax_matrix(x, complex(zeta) + m.tau, m, cfg).matrix
    return twist_residual(eta_shifted, eta, x.u)


@dataclass(frozen=True, eq=False)
class LoopField:
    """Matrix-valued Laurent polynomial ``sum_{n=-K}^{K} coeffs[n + K] z^n`` on ``|z| = radius``."""

    radius: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if c.ndim != 3 or c.shape[0] % 2 != 1:
            raise InvalidConfig(f"coeffs must have shape (2K+1, n, n), got {c.shape}")
        if not self.radius > 0:
            raise InvalidConfig("radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def K(self):
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def powers(self):
        return np.arange(-self.K, self.K + 1)

    def coefficient(self, n):
        return self.coeffs[n + self.K]

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        zp = z[..., None] ** self.powers
        return np.tensordot(zp, self.coeffs, axes=([-1], [0]))

    def nodes(self, M):
        return self.radius * np.exp(TWO_PI_I * np.arange(M) / M)

    def sample(self, M=None):
        M = 2 * self.K + 1 if M is None else M
        return self.evaluate(self.nodes(M))

    @classmethod
    def from_samples(cls, samples, radius, K):
        """Recover Laurent coefficients from ``M >= 2K+1`` equispaced samples on ``|z| = radius``."""
        samples = np.asarray(samples, dtype=complex)
        M = samples.shape[0]
        if M < 2 * K + 1:
            raise InvalidConfig(f"need at least {2 * K + 1} samples, got {M}")
        fft = np.fft.fft(samples, axis=0) / M
        n = np.arange(-K, K + 1)
        scale = float(radius) ** (-n.astype(float))
        coeffs = fft[n % M] * scale.reshape((-1,) + (1,) * (samples.ndim - 1))
        return cls(radius, coeffs)

    def to_json(self):
        pair = lambda z: [float(z.real), float(z.imag)]
        return {
            "r": self.radius,
            "K": self.K,
            "coeffs": [
                [int(n), [[pair(v) for v in row] for row in self.coefficient(n)]]
                for n in self.powers
            ],
        }

    @classmethod
    def from_json(cls, data):
        K = int(data["K"])
        entries = {int(n): mat for n, mat in data["coeffs"]}
        shape = np.asarray(next(iter(entries.values()))).shape[:2]
        coeffs = np.zeros((2 * K + 1,) + shape, dtype=complex)
        for n, mat in entries.items():
            if abs(n) > K:
                raise InvalidConfig(f"coefficient index {n} outside [-{K}, {K}]")
            arr = np.asarray(mat, dtype=float)
            coeffs[n + K] = arr[..., 0] + 1j * arr[..., 1]
        return cls(float(data["r"]), coeffs)


def solve_moment_fourier(u, p, K, m, w=None):
    """Laurent modes of the Lax matrix from the mode-by-mode moment equation.

    The source ``p delta(z)`` at ``z = 1`` has every Fourier mode equal to ``p``;
    the resulting off-diagonal modes are ``p_jk / (1 - q^n exp(2 pi i (u_k - u_j)))``
    and the diagonal is the constant loop ``w``.  Returned on the mid-annulus
    circle ``|z| = |q|^(1/2)``.
    """
    m = as_modulus(m)
    u = np.asarray(u, dtype=complex)
    p = np.asarray(p, dtype=complex)
    N = u.size
    w = np.zeros(N, dtype=complex) if w is None else np.asarray(w, dtype=complex)
    n = np.arange(-K, K + 1)
    qn = m.q ** n.astype(float)
    coeffs = np.zeros((2 * K + 1, N, N), dtype=complex)
    offending = []
    for j in range(N):
        for k in range(N):
            if j == k:
                continue
            divisor = 1 - qn * np.exp(TWO_PI_I * (u[k] - u[j]))
            # resonance: q^n = exp(2 pi i (u_j - u_k)); measured relative to the divisor scale
            rel = np.abs(divisor) / np.maximum(1.0, np.abs(qn))
            bad = np.nonzero(rel < RESONANCE_TOL)[0]
            offending.extend((int(n[i]), j, k) for i in bad)
            with np.errstate(divide="ignore", invalid="ignore"):
                coeffs[:, j, k] = p[j, k] / divisor
    if offending:
        raise Resonance(f"resonant modes (n, j, k): {offending}", modes=offending)
    coeffs[K] += np.diag(w)
    return LoopField(abs(m.q) ** 0.5, coeffs)


def plemelj_split(boundary):
    """Split a loop into the part holomorphic inside (``n >= 0``) and outside (``n < 0``, zero at infinity)."""
    K = boundary.K
    inside = np.array(boundary.coeffs)
    outside = np.array(boundary.coeffs)
    inside[:K] = 0
    outside[K:] = 0
    return LoopField(boundary.radius, inside), LoopField(boundary.radius, outside)


def characteristic_coefficients(A):
    """Coefficients ``[1, c_1, ..., c_N]`` of ``det(lambda I - A)`` (Faddeev-LeVerrier)."""
    A = np.asarray(A, dtype=complex)
    N = A.shape[0]
    coeffs = [1.0 + 0j]
    Mk = np.zeros_like(A)
    eye = np.eye(N, dtype=complex)
    for k in range(1, N + 1):
        Mk = A @ Mk + coeffs[-1] * eye
        coeffs.append(-np.trace(A @ Mk) / k)
    return np.array(coeffs)


def spectral_curve_sample(x, grid, m, cfg=DEFAULT_SERIES):
    """Characteristic-polynomial coefficients of ``eta(zeta)`` for each ``zeta`` in ``grid``.

    Row ``i`` holds ``[1, c_1, ..., c_N]`` with ``det(lambda - eta) = sum_k c_k lambda^(N-k)``.
    """
    m = as_modulus(m)
    return np.array([characteristic_coefficients(lax_matrix(x, z, m, cfg).matrix) for z in grid])


def hamiltonian_offset(x, m, cfg=DEFAULT_SERIES):
    """``2 H - I_2`` in closed form: ``N(N-1) E2 / (4 pi^2) - E2 tr(p^2) / 12``.

    Depends on the phase point only through the Casimir ``tr p^2``.
    """
    m = as_modulus(m)
    e2 = eisenstein_e2(m, cfg)
    N = x.N
    trp2 = complex(np.trace(x.p @ x.p))
    return N * (N - 1) * e2 / (4 * math.pi ** 2) - e2 * trp2 / 12
