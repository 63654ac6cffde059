"""Reduced phase space of the spin Calogero system and its Poisson structure.

Coordinates are ``(u, w, p)``: positions ``u``, canonically conjugate momenta
``w`` and a spin matrix ``p`` in gl(N)*.  The bracket is

    {u_j, w_k} = delta_jk
    {p_ab, p_cd} = SPIN_BRACKET_SCALE * (delta_cb p_ad - delta_ad p_cb)

All coordinates are complex; observables are holomorphic functions of them and
their gradients are holomorphic partial derivatives.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GradientUnavailable, InvalidPhasePoint, SingularS

#: Lie-Poisson scale matched to the 1/(2 pi i) normalization of the Lax matrix.
SPIN_BRACKET_SCALE = 2j * math.pi

FD_REL_STEP = 1e-6


def _readonly(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Point ``(u, w, p)`` on the reduced surface ``p_jj = 0``.

    The constructor zeroes the diagonal of ``p`` and keeps what it removed in
    ``discarded_diagonal``.
    """

    u: np.ndarray
    w: np.ndarray
    p: np.ndarray
    discarded_diagonal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = np.array(self.u, dtype=complex).reshape(-1)
        w = np.array(self.w, dtype=complex).reshape(-1)
        p = np.array(self.p, dtype=complex)
        N = u.size
        if N < 2:
            raise InvalidPhasePoint(f"need N >= 2 particles, got N={N}")
        if w.shape != (N,) or p.shape != (N, N):
            raise InvalidPhasePoint(
                f"inconsistent shapes: u{u.shape}, w{w.shape}, p{p.shape}"
            )
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w)) and np.all(np.isfinite(p))):
            raise InvalidPhasePoint("phase point has non-finite entries")
        diag = np.diag(p).copy()
        np.fill_diagonal(p, 0)
        object.__setattr__(self, "u", _readonly(u))
        object.__setattr__(self, "w", _readonly(w))
        object.__setattr__(self, "p", _readonly(p))
        object.__setattr__(self, "discarded_diagonal", _readonly(diag))

    @property
    def N(self):
        return self.u.size

    @classmethod
    def real_slice(cls, u, w, p):
        """Real positions and momenta with a Hermitian spin ``(p + p^H) / 2``."""
        p = np.asarray(p, dtype=complex)
        return cls(np.real(u), np.real(w), 0.5 * (p + p.conj().T))

    def to_vector(self):
        return np.concatenate([self.u, self.w, self.p.ravel()])

    @classmethod
    def from_vector(cls, vec, N):
        vec = np.asarray(vec, dtype=complex)
        return cls(vec[:N], vec[N : 2 * N], vec[2 * N :].reshape(N, N))

    def replace(self, u=None, w=None, p=None):
        return PhasePoint(
            self.u if u is None else u,
            self.w if w is None else w,
            self.p if p is None else p,
        )

    def to_json(self):
        pair = lambda z: [float(z.real), float(z.imag)]
        return {
            "N": self.N,
            "u": [pair(z) for z in self.u],
            "w": [pair(z) for z in self.w],
            "p": [[pair(z) for z in row] for row in self.p],
        }

    @classmethod
    def from_json(cls, data):
        try:
            cplx = lambda pr: complex(pr[0], pr[1])
            u = [cplx(z) for z in data["u"]]
            w = [cplx(z) for z in data["w"]]
            p = [[cplx(z) for z in row] for row in data["p"]]
        except (KeyError, TypeError, IndexError) as exc:
            raise InvalidPhasePoint(f"malformed phase-point JSON: {exc!r}")
        point = cls(u, w, p)
        if "N" in data and int(data["N"]) != point.N:
            raise InvalidPhasePoint(f"declared N={data['N']} but found {point.N} positions")
        return point


@dataclass(frozen=True)
class OrbitData:
    """Coadjoint-orbit representative ``J`` and group point ``s``; the spin is ``s^-1 J s``."""

    J: np.ndarray
    s: np.ndarray

    def spin(self):
        return orbit_attach(self.J, self.s)


def orbit_attach(J, s, max_cond=1e8):
    """Spin ``p = s^-1 J s``, diagonal included (callers decide what to do with it)."""
    J = np.asarray(J, dtype=complex)
    s = np.asarray(s, dtype=complex)
    cond = np.linalg.cond(s)
    if not np.isfinite(cond) or cond >= max_cond:
        raise SingularS(f"group element is ill-conditioned (cond={cond:.3g})")
    return np.linalg.solve(s, J @ s)


def casimirs(x, kmax):
    """``(tr p, tr p^2, ..., tr p^kmax)``."""
    if kmax > x.N:
        raise ValueError(f"kmax={kmax} exceeds N={x.N}")
    out = np.empty(kmax, dtype=complex)
    pk = np.eye(x.N, dtype=complex)
    for k in range(kmax):
        pk = pk @ x.p
        out[k] = np.trace(pk)
    return out


@dataclass(frozen=True)
class Observable:
    """Holomorphic function of ``(u, w, p)``.

    ``value(u, w, p) -> complex``; the optional ``grad(u, w, p)`` returns
    ``(df/du, df/dw, df/dp)`` with ``(df/dp)[a, b] = df/dp_ab``.
    """

    value: Callable
    grad: Optional[Callable] = None
    name: str = ""

    def __call__(self, x):
        return self.value(x.u, x.w, x.p)


def _flat(u, w, p):
    return np.concatenate([u, w, np.ravel(p)])


def _split(vec, N):
    return vec[:N], vec[N : 2 * N], vec[2 * N :].reshape(N, N)


def finite_difference_gradient(obs, u, w, p, rel_step=FD_REL_STEP):
    """Central differences with one level of Richardson extrapolation."""
    N = len(u)
    base = _flat(np.asarray(u, complex), np.asarray(w, complex), np.asarray(p, complex))
    grad = np.empty(base.size, dtype=complex)

    def central(i, h):
        e = np.zeros(base.size, dtype=complex)
        e[i] = h
        fp = obs.value(*_split(base + e, N))
        fm = obs.value(*_split(base - e, N))
        return (fp - fm) / (2 * h)

    for i in range(base.size):
        h = rel_step * max(1.0, abs(base[i]))
        grad[i] = (4 * central(i, h / 2) - central(i, h)) / 3
    return _split(grad, N)


def gradient(obs, x, allow_fd=True):
    if obs.grad is not None:
        gu, gw, gp = obs.grad(x.u, x.w, x.p)
        return (
            np.asarray(gu, dtype=complex),
            np.asarray(gw, dtype=complex),
            np.asarray(gp, dtype=complex),
        )
    if not allow_fd:
        raise GradientUnavailable(f"observable {obs.name or obs!r} has no analytic gradient")
    return finite_difference_gradient(obs, x.u, x.w, x.p)


def hamiltonian_vector(grad, p):
    """Components of the flow ``dx/dt = {x, f}`` for a function with gradient ``grad``."""
    gu, gw, gp = grad
    return gw, -gu, SPIN_BRACKET_SCALE * (p @ gp.T - gp.T @ p)


def bracket_from_gradients(gf, gg, p):
    """``{f, g}`` from the two gradients at spin ``p``."""
    fu, fw, fp = gf
    gu, gw, gp = gg
    canonical = np.sum(fu * gw) - np.sum(fw * gu)
    # sum_{a,b,d} F_ab G_bd p_ad - sum_{a,b,c} F_ab G_ca p_cb
    spin = np.sum((fp @ gp) * p) - np.sum((gp @ fp) * p)
    return canonical + SPIN_BRACKET_SCALE * spin


def canonical_bracket(f, g, x, allow_fd=True):
    """Poisson bracket ``{f, g}`` at ``x``.

    Observables without an analytic gradient fall back to finite differences
    unless ``allow_fd`` is false, in which case :class:`GradientUnavailable` is raised.
    """
    return complex(bracket_from_gradients(gradient(f, x, allow_fd), gradient(g, x, allow_fd), x.p))


def _directional(obs, u, w, p, du, dw, dp):
    # Richardson-extrapolated central difference along a fixed direction; exact
    # for polynomials of degree <= 4 along the line at any step, so the step is
    # taken large to keep rounding small.
    scale = max(
        1.0,
        float(np.abs(u).max()),
        float(np.abs(w).max()),
        float(np.abs(p).max()),
    )
    norm = max(float(np.abs(du).max()), float(np.abs(dw).max()), float(np.abs(dp).max()))
    if norm == 0:
        return 0j
    h = 0.25 * scale / norm

    def central(step):
        fp = obs.value(u + step * du, w + step * dw, p + step * dp)
        fm = obs.value(u - step * du, w - step * dw, p - step * dp)
        return (fp - fm) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def bracket_observable(f, g):
    """``{f, g}`` as an :class:`Observable` (no analytic gradient)."""

    def value(u, w, p):
        gf = _grad_raw(f, u, w, p)
        gg = _grad_raw(g, u, w, p)
        return bracket_from_gradients(gf, gg, np.asarray(p, dtype=complex))

    return Observable(value, None, name=f"{{{f.name},{g.name}}}")


def _grad_raw(obs, u, w, p):
    if obs.grad is not None:
        return tuple(np.asarray(a, dtype=complex) for a in obs.grad(u, w, p))
    return finite_difference_gradient(obs, u, w, p)


def _outer_bracket(f, inner, x):
    # {f, K} = -dK[X_f], where X_f is the flow generated by f
    du, dw, dp = hamiltonian_vector(gradient(f, x, allow_fd=False), x.p)
    u, w, p = (np.array(a, dtype=complex) for a in (x.u, x.w, x.p))
    return -_directional(inner, u, w, p, du, dw, dp)


def jacobi_check(x, f, g, h):
    """``|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|`` for observables with analytic gradients.

    The inner brackets are differentiated along the Hamiltonian vector field of
    the outer observable, which is exact for polynomial observables of degree <= 2.
    """
    for obs in (f, g, h):
        if obs.grad is None:
            raise GradientUnavailable("jacobi_check needs analytic gradients")
    total = (
        _outer_bracket(f, bracket_observable(g, h), x)
        + _outer_bracket(g, bracket_observable(h, f), x)
        + _outer_bracket(h, bracket_observable(f, g), x)
    )
    return float(abs(total))


def check_gradient(obs, x, rtol=1e-6):
    """Largest relative mismatch between the analytic gradient and finite differences."""
    if obs.grad is None:
        raise GradientUnavailable("observable has no analytic gradient")
    analytic = _flat(*gradient(obs, x))
    numeric = _flat(*finite_difference_gradient(obs, x.u, x.w, x.p))
    scale = max(1.0, float(np.abs(analytic).max()))
    err = float(np.abs(analytic - numeric).max()) / scale
    return err, err <= rtol


# --- observable factories -------------------------------------------------


def coordinate(kind, *index):
    """Coordinate function ``u_j``, ``w_j`` or ``p_ab`` (zero-based indices)."""
    if kind not in ("u", "w", "p"):
        raise ValueError(f"unknown coordinate kind {kind!r}")

    def value(u, w, p):
        return complex({"u": u, "w": w, "p": p}[kind][index])

    def grad(u, w, p):
        gu, gw, gp = np.zeros(len(u), complex), np.zeros(len(u), complex), np.zeros_like(p, complex)
        {"u": gu, "w": gw, "p": gp}[kind][index] = 1
        return gu, gw, gp

    return Observable(value, grad, name=f"{kind}{index}")


def trace_power(k):
    """Casimir ``tr p^k``."""

    def value(u, w, p):
        return complex(np.trace(np.linalg.matrix_power(np.asarray(p, complex), k)))

    def grad(u, w, p):
        p = np.asarray(p, complex)
        n = len(u)
        return (
            np.zeros(n, complex),
            np.zeros(n, complex),
            k * np.linalg.matrix_power(p, k - 1).T,
        )

    return Observable(value, grad, name=f"tr p^{k}")


def quadratic_observable(Q, b, c=0.0):
    """``c + b.x + x.Q.x`` in the flat coordinates ``x = (u, w, vec p)``."""
    Q = np.asarray(Q, dtype=complex)
    b = np.asarray(b, dtype=complex)
    sym = Q + Q.T

    def value(u, w, p):
        x = _flat(u, w, p)
        return complex(c + b @ x + x @ Q @ x)

    def grad(u, w, p):
        x = _flat(u, w, p)
        return _split(b + sym @ x, len(u))

    return Observable(value, grad, name="quadratic")


def linear_observable(b, c=0.0):
    b = np.asarray(b, dtype=complex)
    return quadratic_observable(np.zeros((b.size, b.size)), b, c)
