"""
Time-dependent Schrodinger, Lindblad and smoothed-Lindblad evolution on [0, 1].

The smoothed model replaces the noise generator at time ``t`` by a
kernel-weighted average of the generators at other times ``s``, each carried
to ``t`` by the ideal propagator ``U_{s,t}``. Smoothing is done on jump
operators: conjugating every ``L_k(s)`` by ``U_{s,t}`` and scaling by the
square root of its quadrature weight yields a jump set whose dissipator is
exactly the averaged superoperator.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

from . import channels as ch
from . import qmath
from .qmath import DimensionError, n_qubits_of

DEFAULT_STEPS = 1000
TRACE_DRIFT_TOL = 1e-8
POSITIVITY_TOL = -1e-8


class ToleranceWarning(UserWarning):
    pass


@dataclass
class HamiltonianSchedule:
    n_qubits: int
    h_at: Callable[[float], np.ndarray]

    def __call__(self, t):
        h = np.asarray(self.h_at(t), dtype=complex)
        if h.shape != (2**self.n_qubits,) * 2:
            raise DimensionError(f"H({t}) has shape {h.shape}")
        if not qmath.is_hermitian(h):
            raise ValueError(f"H({t}) is not Hermitian")
        return h

    @classmethod
    def constant(cls, h):
        h = np.asarray(h, dtype=complex)
        return cls(n_qubits_of(h), lambda t: h)

    @classmethod
    def zero(cls, n):
        z = np.zeros((2**n, 2**n), dtype=complex)
        return cls(n, lambda t: z)

    @classmethod
    def piecewise(cls, breakpoints, hamiltonians):
        """``hamiltonians[i]`` on ``[breakpoints[i-1], breakpoints[i])``."""
        hs = [np.asarray(h, dtype=complex) for h in hamiltonians]
        edges = np.asarray(breakpoints, dtype=float)
        return cls(n_qubits_of(hs[0]), lambda t: hs[int(np.searchsorted(edges, t, side="right"))])


@dataclass
class NoiseSchedule:
    """Jump operators ``L_k(t)``; the dissipator uses ``sqrt(rate) * L_k``."""

    jump_ops_at: Callable[[float], list]
    rate: float = 1.0

    def __call__(self, t):
        s = np.sqrt(self.rate)
        return [s * np.asarray(L, dtype=complex) for L in self.jump_ops_at(t)]

    @classmethod
    def constant(cls, jump_ops, rate=1.0):
        ops = [np.asarray(L, dtype=complex) for L in jump_ops]
        return cls(lambda t: ops, rate)

    @classmethod
    def none(cls):
        return cls(lambda t: [], 0.0)


@dataclass
class SmoothingKernel:
    k: Callable[[float], float]
    width: float

    def __call__(self, u):
        return self.k(u)

    def values(self, u):
        """Kernel on an array of offsets."""
        u = np.asarray(u, dtype=float)
        try:
            out = np.asarray(self.k(u), dtype=float)
            if out.shape == u.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([self.k(float(x)) for x in u.ravel()]).reshape(u.shape)

    def kbar(self, t):
        """``integral_{t-1}^{t} k(s) ds``."""
        lo, hi = t - 1.0, t
        pts = [p for p in (-self.width, 0.0, self.width) if lo < p < hi]
        return quad(self.k, lo, hi, points=pts or None, limit=200)[0]

    @classmethod
    def raised_cosine(cls, width):
        if not 0 < width <= 1:
            raise ValueError("kernel width must lie in (0, 1]")

        def k(u):
            return np.where(np.abs(u) < width, 1.0 + np.cos(np.pi * np.asarray(u) / width), 0.0)
        return cls(k, width)

    @classmethod
    def near_delta(cls, width=1e-6):
        return cls.raised_cosine(width)

    @classmethod
    def flat(cls):
        return cls(lambda u: np.ones_like(np.asarray(u, dtype=float)), 1.0)


@dataclass
class PropagatorGrid:
    times: np.ndarray
    U0t: np.ndarray

    @property
    def steps(self):
        return len(self.times) - 1

    def u(self, s_index, t_index):
        """``U_{s,t}``; for ``s > t`` this is ``U_{t,s}^dag``."""
        return self.U0t[t_index] @ self.U0t[s_index].conj().T

    def unitarity_error(self):
        d = self.U0t.shape[1]
        prod = np.einsum("nji,njk->nik", self.U0t.conj(), self.U0t)
        return float(np.max(np.abs(prod - np.eye(d))))

    @classmethod
    def from_steps(cls, step_unitaries):
        """Grid on ``t_i = i/T`` from per-step unitaries ``V_1 .. V_T``."""
        d = step_unitaries[0].shape[0]
        us = [np.eye(d, dtype=complex)]
        for v in step_unitaries:
            us.append(np.asarray(v, dtype=complex) @ us[-1])
        return cls(np.linspace(0, 1, len(us)), np.stack(us))


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    flagged: bool = False

    @property
    def final(self):
        return self.states[-1]

    def observable(self, op):
        return np.real(np.einsum("tij,ji->t", self.states, op))

    def to_dict(self):
        out = {
            "times": self.times.tolist(),
            "diagnostics": self.diagnostics,
            "flagged": self.flagged,
        }
        if self.states.shape[1] == 2:
            out["bloch"] = [qmath.bloch_vector(s).tolist() for s in self.states]
        return out


def _diagnose(times, states, step_rates=None, trace_tol=TRACE_DRIFT_TOL, psd_tol=POSITIVITY_TOL):
    span = max(times[-1] - times[0], 1e-300)
    drift = float(np.max(np.abs(np.einsum("tii->t", states) - 1)))
    herm = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    floor = float(np.min(np.linalg.eigvalsh(herm)[:, 0]))
    diag = {"trace_drift": drift, "trace_drift_per_time": drift / span, "positivity_floor": floor}
    if step_rates is not None:
        diag["noise_rate_max"] = float(np.max(step_rates)) if len(step_rates) else 0.0
        diag["noise_rate_mean"] = float(np.mean(step_rates)) if len(step_rates) else 0.0
    flagged = diag["trace_drift_per_time"] > trace_tol or floor < psd_tol
    if flagged:
        warnings.warn(f"evolution outside tolerance: {diag}", ToleranceWarning, stacklevel=3)
    return diag, flagged


# -- unitary part ------------------------------------------------------------

def build_propagator_grid(H, steps, method="midpoint"):
    """Ideal propagators ``U_{0,t_i}`` on a uniform grid of ``steps`` intervals.

    ``midpoint`` uses ``exp(-i H(t + dt/2) dt)`` per step (second order).
    ``magnus4`` uses the two-point Gauss fourth-order Magnus step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    times = np.linspace(0.0, 1.0, steps + 1)
    dt = 1.0 / steps
    d = 2**H.n_qubits
    us = np.empty((steps + 1, d, d), dtype=complex)
    us[0] = np.eye(d)
    c = np.sqrt(3) / 6
    for i in range(steps):
        t = times[i]
        if method == "midpoint":
            omega = H(t + dt / 2) * dt
        elif method == "magnus4":
            h1, h2 = H(t + (0.5 - c) * dt), H(t + (0.5 + c) * dt)
            omega = 0.5 * dt * (h1 + h2) - 1j * (np.sqrt(3) / 12) * dt**2 * (h2 @ h1 - h1 @ h2)
        else:
            raise ValueError(f"unknown propagator method {method!r}")
        us[i + 1] = expm(-1j * omega) @ us[i]
    return PropagatorGrid(times, us)


def schrodinger_evolve(rho0, grid):
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != grid.U0t.shape[1:]:
        raise DimensionError(f"state shape {rho0.shape} vs propagator shape {grid.U0t.shape[1:]}")
    states = np.einsum("tij,jk,tlk->til", grid.U0t, rho0, grid.U0t.conj())
    diag, flagged = _diagnose(grid.times, states)
    return EvolutionResult(grid.times, states, diag, flagged)


# -- master equations --------------------------------------------------------

def _commutator_term(h, rho):
    return -1j * (h @ rho - rho @ h)


def dissipator(jumps, rho, anti=None):
    """``sum_k L rho L^dag - 1/2 {L^dag L, rho}`` for a stack of jump operators."""
    if len(jumps) == 0:
        return np.zeros_like(rho)
    if anti is None:
        anti = np.einsum("kji,kjl->il", jumps.conj(), jumps)
    sandwich = np.einsum("kij,jl,kml->im", jumps, rho, jumps.conj(), optimize=True)
    return sandwich - 0.5 * (anti @ rho + rho @ anti)


def _stack(ops, d):
    return np.stack(ops) if len(ops) else np.zeros((0, d, d), dtype=complex)


def _rk4(rho0, times, rhs):
    """Classical RK4; ``rhs(t, rho, node)`` where ``node`` is a half-step grid index."""
    states = np.empty((len(times),) + rho0.shape, dtype=complex)
    states[0] = rho = rho0
    for i in range(len(times) - 1):
        t, dt = times[i], times[i + 1] - times[i]
        k1 = rhs(t, rho, 2 * i)
        k2 = rhs(t + dt / 2, rho + 0.5 * dt * k1, 2 * i + 1)
        k3 = rhs(t + dt / 2, rho + 0.5 * dt * k2, 2 * i + 1)
        k4 = rhs(t + dt, rho + dt * k3, 2 * i + 2)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[i + 1] = rho
    return states


def _step_noise_rates(times, states, H):
    """Trace distance per unit time between each noisy step and its ideal image."""
    rates = []
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        u = expm(-1j * H(times[i] + dt / 2) * dt)
        ideal = u @ states[i] @ u.conj().T
        rates.append(qmath.trace_distance(states[i + 1], ideal) / dt)
    return np.array(rates)


def lindblad_evolve(rho0, H, E, steps=DEFAULT_STEPS, noise_rates=False):
    rho0 = np.asarray(rho0, dtype=complex)
    d = 2**H.n_qubits
    if rho0.shape != (d, d):
        raise DimensionError(f"state shape {rho0.shape} vs Hamiltonian on {H.n_qubits} qubits")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    times = np.linspace(0.0, 1.0, steps + 1)

    def rhs(t, rho, _):
        return _commutator_term(H(t), rho) + dissipator(_stack(E(t), d), rho)

    states = _rk4(rho0, times, rhs)
    rates = _step_noise_rates(times, states, H) if noise_rates else None
    diag, flagged = _diagnose(times, states, rates)
    return EvolutionResult(times, states, diag, flagged)


# -- smoothing ---------------------------------------------------------------

@dataclass
class EffectiveJumps:
    """Weighted, conjugated jump set acting at grid node ``t_index``."""

    ops: np.ndarray
    weights: np.ndarray
    sources: np.ndarray

    def channel_rate(self):
        """Total dissipator strength ``sum_k ||L_k||_F^2``."""
        return float(np.sum(np.abs(self.ops) ** 2))


_GREGORY_ENDS = np.array([3 / 8, 7 / 6, 23 / 24])


def _quadrature_rule(nodes):
    """Node weights for integrating over ``nodes``.

    Fourth-order Gregory end corrections on a uniform grid with at least six
    nodes; the trapezoid rule otherwise.
    """
    m = len(nodes)
    tau = np.zeros(m)
    if m < 2:
        return tau
    gaps = np.diff(nodes)
    if m >= 6 and np.allclose(gaps, gaps[0], rtol=1e-9, atol=0):
        tau[:] = gaps[0]
        tau[:3] *= _GREGORY_ENDS
        tau[-3:] *= _GREGORY_ENDS[::-1]
        return tau
    tau[:-1] += gaps / 2
    tau[1:] += gaps / 2
    return tau


def quadrature_weights(t_index, grid, K, mode="causal"):
    """Normalized quadrature weights for ``K(t - s) ds`` over the chosen range of ``s``."""
    times = grid.times
    t = times[t_index]
    last = t_index if mode == "causal" else len(times) - 1
    if mode not in ("causal", "full_interval"):
        raise ValueError(f"unknown smoothing mode {mode!r}")
    idx = np.arange(last + 1)
    tau = _quadrature_rule(times[: last + 1])
    kv = K.values(t - times[idx]) if isinstance(K, SmoothingKernel) else \
        np.array([K(t - times[j]) for j in idx], dtype=float)
    if np.any(kv < 0):
        raise ValueError("smoothing kernel is negative at a quadrature node")
    w = kv * tau
    if w.sum() <= 0:
        # kernel narrower than the grid: the normalized average collapses onto s = t
        w = np.zeros(last + 1)
        w[t_index] = 1.0
    keep = w > 0
    return idx[keep], w[keep] / w.sum()


class _InteractionJumps:
    """Caches ``J_k(s) = U_{0,s}^dag L_k(s) U_{0,s}`` per grid node."""

    def __init__(self, E, grid):
        self.E, self.grid = E, grid
        self._cache = {}
        self._dense = None

    def at(self, j):
        if j not in self._cache:
            u = self.grid.U0t[j]
            ops = self.E(self.grid.times[j])
            d = u.shape[0]
            self._cache[j] = _stack([u.conj().T @ L @ u for L in ops], d)
        return self._cache[j]

    def stacked(self, nodes):
        """Concatenated jump stacks for ``nodes`` and the per-node counts."""
        d = self.grid.U0t.shape[1]
        if self._dense is None:
            blocks = [self.at(j) for j in range(len(self.grid.times))]
            counts = {len(b) for b in blocks}
            # a fixed number of jump operators lets every lookup be one fancy index
            self._dense = np.stack(blocks) if len(counts) == 1 else False
        if self._dense is not False:
            return self._dense[nodes].reshape(-1, d, d), np.full(len(nodes), self._dense.shape[1])
        blocks = [self.at(j) for j in nodes]
        counts = np.array([len(b) for b in blocks], dtype=int)
        if not blocks:
            return np.zeros((0, d, d), dtype=complex), counts
        return np.concatenate(blocks), counts


def smoothed_generator(t_index, E, grid, K, mode="causal", _cache=None):
    """Jump operators of the smoothed noise at grid node ``t_index``.

    Each ``L_k(s)`` becomes ``sqrt(w_s) U_{s,t} L_k(s) U_{s,t}^dag`` with
    ``w_s`` the normalized quadrature weight of ``K(t - s)``.
    """
    cache = _cache or _InteractionJumps(E, grid)
    nodes, weights = quadrature_weights(t_index, grid, K, mode)
    ut = grid.U0t[t_index]
    d = grid.U0t.shape[1]
    J, counts = cache.stacked(nodes)
    ws = np.repeat(weights, counts)
    src = np.repeat(nodes, counts)
    if ws.size == 0:
        return EffectiveJumps(np.zeros((0, d, d), dtype=complex), ws, src)
    ops = np.sqrt(ws)[:, None, None] * (ut @ J @ ut.conj().T)
    return EffectiveJumps(ops, ws, src)


def smoothed_lindblad_evolve(rho0, H, E, K, steps=DEFAULT_STEPS, mode="causal",
                             noise_rates=False, propagator="magnus4"):
    """RK4 on the smoothed master equation.

    The propagator grid is built at twice the resolution so every RK4 stage
    time is a grid node.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = 2**H.n_qubits
    if rho0.shape != (d, d):
        raise DimensionError(f"state shape {rho0.shape} vs Hamiltonian on {H.n_qubits} qubits")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    fine = build_propagator_grid(H, 2 * steps, propagator)
    cache = _InteractionJumps(E, fine)
    gens = {}

    def rhs(t, rho, node):
        if node not in gens:
            eff = smoothed_generator(node, E, fine, K, mode, cache)
            anti = np.einsum("kji,kjl->il", eff.ops.conj(), eff.ops)
            gens[node] = (eff.ops, anti)
        ops, anti = gens[node]
        return _commutator_term(H(t), rho) + dissipator(ops, rho, anti)

    times = np.linspace(0.0, 1.0, steps + 1)
    states = _rk4(rho0, times, rhs)
    rates = _step_noise_rates(times, states, H) if noise_rates else None
    diag, flagged = _diagnose(times, states, rates)
    return EvolutionResult(times, states, diag, flagged)


def discrete_smoothed_noise(t_index, step_channels, grid, K, mode="causal"):
    """Noise channel at step ``t_index`` (1-based) of a ``T``-step run.

    Mixture of the per-step channels ``E_s`` conjugated by ``U_{s,t}`` with
    weights ``K((t - s)/T)``; ``grid`` holds ``U_{0,s}`` at ``s = 0 .. T``.
    """
    T = len(step_channels)
    if not 1 <= t_index <= T:
        raise ValueError(f"t_index must lie in 1..{T}")
    if mode not in ("causal", "full_interval"):
        raise ValueError(f"unknown smoothing mode {mode!r}")
    last = t_index if mode == "causal" else T
    s_range = range(1, last + 1)
    offsets = (t_index - np.arange(1, last + 1)) / T
    w = K.values(offsets) if isinstance(K, SmoothingKernel) else \
        np.array([K(u) for u in offsets], dtype=float)
    if np.any(w < 0):
        raise ValueError("smoothing kernel is negative at a step")
    if w.sum() <= 0:
        raise ValueError("all smoothing weights vanish")
    w /= w.sum()
    parts, pw = [], []
    for s, ws in zip(s_range, w):
        if ws > 0:
            parts.append(ch.conjugate_channel(grid.u(s, t_index), step_channels[s - 1]))
            pw.append(ws)
    return ch.mixture(parts, np.array(pw) / np.sum(pw))


# -- the alternating X/Z example ---------------------------------------------

def x_rot(theta):
    """``exp(i X theta)``."""
    return np.cos(theta) * qmath.I2 + 1j * np.sin(theta) * qmath.X


def z_rot(theta):
    """``exp(i Z theta)``."""
    return np.cos(theta) * qmath.I2 + 1j * np.sin(theta) * qmath.Z


def random_z_channel(delta):
    """``E(rho) = (Z(d) rho Z(-d) + Z(-d) rho Z(d)) / 2``."""
    s = np.sqrt(0.5)
    return ch.KrausChannel((s * z_rot(delta), s * z_rot(-delta)))


def superoperator(channel):
    """Row-major Liouville matrix ``sum_k A_k (x) conj(A_k)``."""
    return sum(np.kron(a, a.conj()) for a in channel.kraus_ops)


def _apply_super(s, rho):
    d = rho.shape[0]
    return (s @ rho.reshape(-1)).reshape(d, d)


@dataclass
class AlternatingRun:
    """Outcome of an alternating X/Z sequence on one qubit."""

    result: EvolutionResult
    superop: np.ndarray
    ideal_unitary: np.ndarray

    def apply(self, rho):
        return _apply_super(self.superop, np.asarray(rho, dtype=complex))

    def bit_survival_fidelity(self):
        """Mean of <i| Phi(|i><i|) |i> over i = 0, 1."""
        s = self.superop
        return float(np.real(s[0, 0] + s[3, 3]) / 2)

    def state_fidelity(self):
        """Mean overlap with the noise-free X-rotation output for inputs |0>, |1>."""
        u = self.ideal_unitary
        fids = []
        for b in ("0", "1"):
            rho = qmath.pure(qmath.ket(b))
            target = u @ rho @ u.conj().T
            fids.append(np.real(np.trace(target @ self.apply(rho))))
        return float(np.mean(fids))


def alternating_sequence(eps_deg, delta_deg, n_pairs, variant="averaged", seed=None,
                         kernel=None, mode="causal", rho0=None):
    """``X(eps) . E . X(eps) . E ...`` with ``n_pairs`` X/Z pairs, X applied first.

    ``averaged`` uses the exact random-sign Z channel, ``unitary_sample``
    draws the signs from ``seed``, ``smoothed`` replaces every Z channel with
    its kernel average over X-conjugated copies.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    eps, delta = np.deg2rad(eps_deg), np.deg2rad(delta_deg)
    ux = x_rot(eps)
    sx = np.kron(ux, ux.conj())
    rho = qmath.pure(qmath.ket("0")) if rho0 is None else np.asarray(rho0, dtype=complex)
    total = np.eye(4, dtype=complex)
    states = [rho]

    if variant == "averaged":
        se = superoperator(random_z_channel(delta))
        steps = [se @ sx] * n_pairs
    elif variant == "unitary_sample":
        rng = np.random.default_rng(seed)
        signs = rng.choice([-1.0, 1.0], size=n_pairs)
        kicks = {sg: z_rot(sg * delta) @ ux for sg in (-1.0, 1.0)}
        supers = {sg: np.kron(u, u.conj()) for sg, u in kicks.items()}
        steps = [supers[sg] for sg in signs]
    elif variant == "smoothed":
        kernel = kernel or SmoothingKernel.raised_cosine(0.25)
        grid = PropagatorGrid.from_steps([ux] * n_pairs)
        noise = [random_z_channel(delta)] * n_pairs
        steps = []
        for t in range(1, n_pairs + 1):
            e_t = discrete_smoothed_noise(t, noise, grid, kernel, mode)
            steps.append(superoperator(e_t) @ sx)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    for s in steps:
        total = s @ total
        states.append(_apply_super(s, states[-1]))
    times = np.linspace(0.0, 1.0, n_pairs + 1)
    states = np.stack(states)
    diag, flagged = _diagnose(times, states)
    ideal = np.linalg.matrix_power(ux, n_pairs)
    return AlternatingRun(EvolutionResult(times, states, diag, flagged), total, ideal)


def kuperberg_lindblad_model(eps_deg, delta_deg, n_pairs):
    """Continuous analogue on [0, 1]: X precession plus Z dephasing.

    The Hamiltonian reproduces ``X(eps)`` per ``1/n_pairs`` of time and the
    dephasing rate reproduces the coherence factor ``cos(2 delta)`` of one
    random Z kick per interval.
    """
    eps, delta = np.deg2rad(eps_deg), np.deg2rad(delta_deg)
    H = HamiltonianSchedule.constant(-n_pairs * eps * qmath.X)
    gamma = -0.5 * n_pairs * np.log(np.cos(2 * delta))
    return H, NoiseSchedule.constant([qmath.Z], rate=gamma)
