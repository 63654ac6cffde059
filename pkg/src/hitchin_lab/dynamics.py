"""Hamiltonian flow of the spin Calogero system and conservation diagnostics."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidConfig,
    NoConvergence,
    PoleAtLattice,
    SpectralCollision,
    StepCollision,
)
from .lax_reduction import _check_positions, hamiltonian, hamiltonian_value, lax_array, lax_matrix
from .phase_space import (
    SPIN_BRACKET_SCALE,
    Observable,
    PhasePoint,
    canonical_bracket,
    casimirs,
)
from .special_functions import (
    DEFAULT_SERIES,
    POLE_GUARD,
    as_modulus,
    reduce_argument,
    wp_and_deriv,
)

COUPLING = 1.0 / (4 * math.pi ** 2)
HORIZON = 10.0


@dataclass(frozen=True)
class FlowConfig:
    dt: float = 1e-3
    steps: int = 1000
    integrator: str = "rk4"
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidConfig("dt must be positive")
        if self.steps < 1 or self.record_every < 1:
            raise InvalidConfig("steps and record_every must be positive")
        if self.integrator not in ("rk4", "implicit_midpoint"):
            raise InvalidConfig(f"unknown integrator {self.integrator!r}")
        if self.dt * self.steps > HORIZON * (1 + 1e-12):
            raise InvalidConfig(f"dt*steps={self.dt * self.steps} exceeds the horizon {HORIZON}")


@dataclass
class Trajectory:
    """Recorded snapshots; ``times`` is elapsed flow time, ``direction`` is +1 or -1."""

    times: list
    points: list
    hamiltonian: list
    casimirs: list
    direction: int = 1
    config: FlowConfig = None

    def __len__(self):
        return len(self.points)

    @property
    def final(self):
        return self.points[-1]


def vector_field(x, m, cfg=DEFAULT_SERIES):
    """``(du, dw, dp)`` of the flow ``dx/dt = {x, H}``.

    du_j = w_j
    dw_j = -1/(4 pi^2) sum_{k != j} p_jk p_kj wp'(u_j - u_k)
    dp   = SPIN_BRACKET_SCALE [p, G],  G_ab = 1/(4 pi^2) p_ab wp(u_a - u_b)

    The diagonal of ``dp`` vanishes identically (wp is even) and is set to
    zero exactly.
    """
    m = as_modulus(m)
    return _field(np.asarray(x.u), np.asarray(x.w), np.asarray(x.p), m, cfg)


def _field(u, w, p, m, cfg):
    N = u.size
    dw = np.zeros(N, dtype=complex)
    G = np.zeros((N, N), dtype=complex)
    for j in range(N):
        for k in range(j + 1, N):
            val, der = wp_and_deriv(u[j] - u[k], m, cfg)
            pp = p[j, k] * p[k, j]
            dw[j] -= COUPLING * pp * der
            dw[k] += COUPLING * pp * der
            G[j, k] = COUPLING * p[j, k] * val
            G[k, j] = COUPLING * p[k, j] * val
    dp = SPIN_BRACKET_SCALE * (p @ G - G @ p)
    np.fill_diagonal(dp, 0)
    return np.array(w, dtype=complex), dw, dp


def hamiltonian_observable(m, cfg=DEFAULT_SERIES):
    """``H`` as an :class:`Observable` with its analytic gradient."""
    m = as_modulus(m)

    def value(u, w, p):
        return hamiltonian_value(u, w, p, m, cfg)

    def grad(u, w, p):
        u = np.asarray(u, complex)
        w = np.asarray(w, complex)
        p = np.asarray(p, complex)
        N = u.size
        gu = np.zeros(N, dtype=complex)
        gp = np.zeros((N, N), dtype=complex)
        for j in range(N):
            for k in range(j + 1, N):
                val, der = wp_and_deriv(u[j] - u[k], m, cfg)
                gu[j] += COUPLING * p[j, k] * p[k, j] * der
                gu[k] -= COUPLING * p[j, k] * p[k, j] * der
                gp[j, k] = COUPLING * p[k, j] * val
                gp[k, j] = COUPLING * p[j, k] * val
        return gu, w.copy(), gp

    return Observable(value, grad, name="H")


def _min_separation(u, m):
    best = math.inf
    for j in range(u.size):
        for k in range(j + 1, u.size):
            x, _, _ = reduce_argument(u[j] - u[k], m)
            best = min(best, abs(x))
    return best


def _flat_field(y, N, m, cfg):
    u, w, p = y[:N], y[N : 2 * N], y[2 * N :].reshape(N, N)
    try:
        du, dw, dp = _field(u, w, p, m, cfg)
    except PoleAtLattice as exc:
        raise StepCollision(f"positions collided during the step ({exc}); try a smaller dt")
    return np.concatenate([du, dw, dp.ravel()])


def _rk4_step(y, h, N, m, cfg):
    k1 = _flat_field(y, N, m, cfg)
    k2 = _flat_field(y + 0.5 * h * k1, N, m, cfg)
    k3 = _flat_field(y + 0.5 * h * k2, N, m, cfg)
    k4 = _flat_field(y + h * k3, N, m, cfg)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _midpoint_step(y, h, N, m, cfg, tol=1e-13, max_iter=50):
    y_next = y + h * _flat_field(y, N, m, cfg)
    for _ in range(max_iter):
        y_new = y + h * _flat_field(0.5 * (y + y_next), N, m, cfg)
        delta = np.abs(y_new - y_next).max()
        y_next = y_new
        if delta <= tol * max(1.0, np.abs(y_new).max()):
            return y_next
    raise NoConvergence(f"implicit midpoint iteration did not converge in {max_iter} iterations")


def integrate(x0, cfg, m, reverse=False, series=DEFAULT_SERIES, pole_guard=POLE_GUARD):
    """Integrate the flow of ``H`` from ``x0``; ``reverse=True`` runs time backwards."""
    m = as_modulus(m)
    _check_positions(x0.u, m, pole_guard)
    N = x0.N
    h = -cfg.dt if reverse else cfg.dt
    step = _rk4_step if cfg.integrator == "rk4" else _midpoint_step
    y = x0.to_vector()

    traj = Trajectory([], [], [], [], direction=-1 if reverse else 1, config=cfg)

    def record(n, vec):
        point = PhasePoint.from_vector(vec, N)
        traj.times.append(n * cfg.dt)
        traj.points.append(point)
        traj.hamiltonian.append(hamiltonian(point, m, series))
        traj.casimirs.append(casimirs(point, N))

    record(0, y)
    for n in range(1, cfg.steps + 1):
        y = step(y, h, N, m, series)
        if not np.all(np.isfinite(y)) or _min_separation(y[:N], m) < pole_guard:
            raise StepCollision(f"positions approached the lattice at step {n}; try a smaller dt")
        if n % cfg.record_every == 0:
            record(n, y)
    return traj


def sorted_eigenvalues(A, collision_tol=1e-8):
    """Eigenvalues ordered by real part, ties broken by imaginary part."""
    ev = np.linalg.eigvals(A)
    order = np.lexsort((ev.imag, ev.real))
    ev = ev[order]
    if ev.size > 1:
        gaps = np.abs(ev[:, None] - ev[None, :]) + np.diag(np.full(ev.size, np.inf))
        if gaps.min() < collision_tol:
            raise SpectralCollision(f"eigenvalues collide (min gap {gaps.min():.3g})")
    return ev


@dataclass
class ConservationReport:
    """Per-snapshot table and the maximal drift of each conserved quantity."""

    columns: list
    rows: list
    drifts: dict = field(default_factory=dict)

    def max_drift(self, prefix):
        vals = [v for k, v in self.drifts.items() if k.startswith(prefix)]
        return max(vals) if vals else 0.0


def conservation_report(traj, zetas, jmax, m, cfg=DEFAULT_SERIES):
    """Tabulate ``H``, the Casimirs, the spectrum of ``eta(zeta)`` and ``tr eta^j`` along a trajectory."""
    m = as_modulus(m)
    if not traj.points:
        raise InvalidConfig("empty trajectory")
    N = traj.points[0].N
    zetas = [complex(z) for z in zetas]
    columns = ["t", "H"]
    columns += [f"casimir{k}" for k in range(1, N + 1)]
    for s in range(len(zetas)):
        columns += [f"eig{i}_z{s}" for i in range(N)]
        columns += [f"tr{j}_z{s}" for j in range(1, jmax + 1)]

    rows = []
    for t, point, H, cas in zip(traj.times, traj.points, traj.hamiltonian, traj.casimirs):
        row = [t, H, *cas]
        for z in zetas:
            eta = lax_matrix(point, z, m, cfg).matrix
            row.extend(sorted_eigenvalues(eta))
            power = np.eye(N, dtype=complex)
            for _ in range(jmax):
                power = power @ eta
                row.append(complex(np.trace(power)))
        rows.append(row)

    table = np.array([r[1:] for r in rows], dtype=complex)
    drift = np.abs(table - table[0]).max(axis=0)
    drifts = {name: float(d) for name, d in zip(columns[1:], drift)}
    return ConservationReport(columns, rows, drifts)


def integral_bracket(x, zeta1, zeta2, m, j1=2, j2=2, cfg=DEFAULT_SERIES):
    """``{tr eta^j1(zeta1), tr eta^j2(zeta2)}`` with finite-difference gradients.

    Exposed as an experiment; for j1 = j2 = 2 it vanishes on the reduced
    surface, higher powers may leave residuals tied to the diagonal gauge.
    """
    m = as_modulus(m)

    def trace_obs(zeta, j):
        def value(u, w, p):
            eta = lax_array(u, w, p, zeta, m, cfg)
            return complex(np.trace(np.linalg.matrix_power(eta, j)))

        return Observable(value, None, name=f"tr eta^{j}({zeta})")

    return canonical_bracket(trace_obs(zeta1, j1), trace_obs(zeta2, j2), x)


def state_distance(x, y):
    return float(np.abs(x.to_vector() - y.to_vector()).max())


def convergence_order(x0, m, T, dt, integrator="rk4"):
    """Observed order from the self-convergence of runs at ``dt``, ``dt/2``, ``dt/4``."""
    finals = []
    for k in range(3):
        h = dt / 2 ** k
        steps = int(round(T / h))
        cfg = FlowConfig(h, steps, integrator, record_every=steps)
        finals.append(integrate(x0, cfg, m).final)
    e1 = state_distance(finals[0], finals[1])
    e2 = state_distance(finals[1], finals[2])
    return math.log2(e1 / e2), (e1, e2)
