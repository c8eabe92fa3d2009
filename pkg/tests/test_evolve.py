import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad_vec

from noisyqc import channels as ch
from noisyqc import evolve as ev
from noisyqc import qmath as q
from oracles import expm_herm, lindblad_dissipator, ordered_product

seeds = st.integers(0, 2**32 - 1)
PLUS = q.pure([1, 1])


# -- propagators -------------------------------------------------------------

def test_zero_hamiltonian_grid_is_identity():
    grid = ev.build_propagator_grid(ev.HamiltonianSchedule.zero(2), 10)
    assert np.allclose(grid.U0t, np.eye(4))


def test_constant_z_grid():
    grid = ev.build_propagator_grid(ev.HamiltonianSchedule.constant(q.Z), 50)
    assert np.max(np.abs(grid.U0t[-1] - np.diag([np.exp(-1j), np.exp(1j)]))) <= 1e-9


@pytest.mark.parametrize("method", ["midpoint", "magnus4"])
def test_piecewise_grid_matches_fine_oracle(method):
    H = ev.HamiltonianSchedule.piecewise([0.5], [q.X, q.Z])
    grid = ev.build_propagator_grid(H, 100, method)
    oracle = ordered_product(lambda t: q.X if t < 0.5 else q.Z, 1000)
    assert np.max(np.abs(grid.U0t[-1] - oracle)) <= 1e-6
    assert grid.unitarity_error() <= 1e-9


def test_grid_u_composes():
    H = ev.HamiltonianSchedule(1, lambda t: np.cos(3 * t) * q.X + t * q.Z)
    grid = ev.build_propagator_grid(H, 40)
    assert np.allclose(grid.u(10, 30) @ grid.u(0, 10), grid.u(0, 30))
    assert np.allclose(grid.u(30, 10), grid.u(10, 30).conj().T)


def test_grid_errors():
    with pytest.raises(ValueError):
        ev.build_propagator_grid(ev.HamiltonianSchedule.zero(1), 0)
    with pytest.raises(ValueError):
        ev.build_propagator_grid(ev.HamiltonianSchedule.zero(1), 4, "euler")
    bad = ev.HamiltonianSchedule(1, lambda t: q.X + 1j * q.Z)
    with pytest.raises(ValueError):
        bad(0.0)


# -- closed-time evolution ---------------------------------------------------

def test_schrodinger_examples():
    rho0 = q.random_density_matrix(2, np.random.default_rng(0))
    res = ev.schrodinger_evolve(rho0, ev.build_propagator_grid(ev.HamiltonianSchedule.zero(2), 5))
    assert np.allclose(res.states, rho0)
    grid = ev.build_propagator_grid(ev.HamiltonianSchedule.constant(q.Z), 200)
    res = ev.schrodinger_evolve(PLUS, grid)
    assert np.max(np.abs(res.observable(q.X) - np.cos(2 * res.times))) <= 1e-6
    diag_state = np.diag([0.3, 0.7]).astype(complex)
    assert np.allclose(ev.schrodinger_evolve(diag_state, grid).states, diag_state)


def test_lindblad_zero_noise_matches_unitary():
    H = ev.HamiltonianSchedule(2, lambda t: np.kron(q.X, q.Z) + np.sin(4 * t) * np.kron(q.I2, q.Y))
    rho0 = q.random_density_matrix(2, np.random.default_rng(1))
    res = ev.lindblad_evolve(rho0, H, ev.NoiseSchedule.none(), 1000)
    ref = ev.schrodinger_evolve(rho0, ev.build_propagator_grid(H, 1000, "magnus4"))
    assert np.max(np.abs(res.states - ref.states)) <= 1e-8


def test_dephasing_closed_form():
    gamma = 0.8
    E = ev.NoiseSchedule.constant([q.Z], rate=gamma)
    res = ev.lindblad_evolve(PLUS, ev.HamiltonianSchedule.zero(1), E, 200)
    assert np.max(np.abs(res.observable(q.X) - np.exp(-2 * gamma * res.times))) <= 1e-6


def test_depolarizing_approaches_fixed_point_monotonically():
    E = ev.NoiseSchedule.constant([q.X, q.Y, q.Z], rate=0.5)
    rho0 = q.random_pure_state(1, np.random.default_rng(2))
    res = ev.lindblad_evolve(rho0, ev.HamiltonianSchedule.zero(1), E, 100)
    d = [q.trace_distance(s, q.maximally_mixed(1)) for s in res.states]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_dissipator_matches_oracle():
    rng = np.random.default_rng(4)
    ls = np.stack([rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)) for _ in range(3)])
    rho = q.random_density_matrix(2, rng)
    assert np.allclose(ev.dissipator(ls, rho), lindblad_dissipator(ls, rho))


def random_instance(seed, n_max=2):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    d = 2**n
    a, b = q.random_hermitian(d, rng, 0.5), q.random_hermitian(d, rng, 0.5)
    H = ev.HamiltonianSchedule(n, lambda t: a + np.sin(2 * t) * b)
    ls = [0.3 * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) for _ in range(2)]
    return H, ev.NoiseSchedule.constant(ls), q.random_density_matrix(n, rng)


@settings(max_examples=8)
@given(seeds)
def test_trace_and_positivity_invariants(seed):
    H, E, rho0 = random_instance(seed)
    for res in (ev.lindblad_evolve(rho0, H, E),
                ev.smoothed_lindblad_evolve(rho0, H, E, ev.SmoothingKernel.raised_cosine(0.3), 200)):
        assert res.diagnostics["trace_drift"] <= 1e-8
        assert res.diagnostics["positivity_floor"] >= -1e-8
        assert not res.flagged


@settings(max_examples=6)
@given(seeds)
def test_lindblad_grid_convergence(seed):
    H, E, rho0 = random_instance(seed, n_max=3)
    ref = ev.lindblad_evolve(rho0, H, E, 160).final
    e1 = q.trace_distance(ev.lindblad_evolve(rho0, H, E, 20).final, ref)
    e2 = q.trace_distance(ev.lindblad_evolve(rho0, H, E, 40).final, ref)
    assert e1 / e2 >= 8


def test_noise_rate_diagnostics():
    E = ev.NoiseSchedule.constant([q.Z], rate=0.4)
    res = ev.lindblad_evolve(PLUS, ev.HamiltonianSchedule.constant(q.X), E, 100, noise_rates=True)
    assert res.diagnostics["noise_rate_max"] > 0
    assert res.diagnostics["noise_rate_mean"] <= res.diagnostics["noise_rate_max"]


def test_unstable_run_is_flagged():
    E = ev.NoiseSchedule.constant([q.Z, q.X], rate=400.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = ev.lindblad_evolve(PLUS, ev.HamiltonianSchedule.zero(1), E, 10)
    assert res.flagged
    assert any(issubclass(w.category, ev.ToleranceWarning) for w in caught)


# -- smoothing ---------------------------------------------------------------

def channel_action(ops, rho):
    return ev.dissipator(np.asarray(ops), rho)


def test_quadrature_weights_normalized():
    grid = ev.build_propagator_grid(ev.HamiltonianSchedule.constant(q.X), 40)
    K = ev.SmoothingKernel.raised_cosine(0.3)
    for mode in ("causal", "full_interval"):
        for t in (0, 1, 5, 20, 40):
            nodes, w = ev.quadrature_weights(t, grid, K, mode)
            assert w.sum() == pytest.approx(1.0) and np.all(w > 0)
            if mode == "causal":
                assert nodes.max() <= t
    nodes, _ = ev.quadrature_weights(10, grid, ev.SmoothingKernel.flat(), "full_interval")
    assert nodes.max() == 40
    with pytest.raises(ValueError):
        ev.quadrature_weights(3, grid, K, "acausal")


def test_near_delta_kernel_recovers_local_jumps():
    H = ev.HamiltonianSchedule.constant(q.X)
    E = ev.NoiseSchedule.constant([q.Z], rate=0.7)
    grid = ev.build_propagator_grid(H, 100)
    rho = q.random_density_matrix(1, np.random.default_rng(0))
    for t in (0, 37, 100):
        eff = ev.smoothed_generator(t, E, grid, ev.SmoothingKernel.near_delta())
        assert np.allclose(channel_action(eff.ops, rho), ev.dissipator(np.stack(E(grid.times[t])), rho))


def test_commuting_noise_is_unchanged_by_smoothing():
    H = ev.HamiltonianSchedule.constant(q.Z)
    E = ev.NoiseSchedule.constant([q.Z], rate=0.3)
    grid = ev.build_propagator_grid(H, 60)
    rho = q.random_density_matrix(1, np.random.default_rng(5))
    plain = ev.dissipator(np.stack(E(0.0)), rho)
    for K in (ev.SmoothingKernel.raised_cosine(0.5), ev.SmoothingKernel.flat()):
        for mode in ("causal", "full_interval"):
            eff = ev.smoothed_generator(30, E, grid, K, mode)
            assert np.allclose(channel_action(eff.ops, rho), plain, atol=1e-12)


def test_wide_kernel_matches_quadrature_oracle():
    omega, gamma, width = 3.0, 0.5, 0.6
    H = ev.HamiltonianSchedule.constant(omega * q.X)
    E = ev.NoiseSchedule.constant([q.Z], rate=gamma)
    K = ev.SmoothingKernel.raised_cosine(width)
    grid = ev.build_propagator_grid(H, 200, "magnus4")
    rho = q.random_density_matrix(1, np.random.default_rng(9))
    t_index = 160
    t = grid.times[t_index]
    eff = ev.smoothed_generator(t_index, E, grid, K)
    got = channel_action(eff.ops, rho)

    def integrand(s):
        u = expm_herm(omega * q.X, t - s)
        L = np.sqrt(gamma) * u @ q.Z @ u.conj().T
        return K(t - s) * lindblad_dissipator([L], rho)

    lo = max(0.0, t - width)
    num = quad_vec(integrand, lo, t, epsabs=1e-12)[0]
    den = quad_vec(lambda s: K(t - s), lo, t, epsabs=1e-12)[0]
    assert np.max(np.abs(got - num / den)) <= 1e-5
    # the conjugated Z picks up a Y component
    coeffs = np.array([q.pauli_coefficients(L) for L in eff.ops])
    assert np.max(np.abs(coeffs[:, 2])) > 1e-3


def test_smoothed_zero_noise_matches_unitary():
    H = ev.HamiltonianSchedule(1, lambda t: q.X + t * q.Z)
    rho0 = q.random_density_matrix(1, np.random.default_rng(6))
    res = ev.smoothed_lindblad_evolve(rho0, H, ev.NoiseSchedule.none(), ev.SmoothingKernel.raised_cosine(0.3), 400)
    ref = ev.schrodinger_evolve(rho0, ev.build_propagator_grid(H, 400, "magnus4"))
    assert np.max(np.abs(res.final - ref.final)) <= 1e-8


@settings(max_examples=5)
@given(seeds)
def test_commuting_noise_evolution_fixed_point(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    d = 2**n
    a = q.random_hermitian(d, rng)
    w, v = np.linalg.eigh(a)
    # any function of a commutes with every H_t = f(t) a
    L = v @ np.diag(rng.standard_normal(d) + 1j * rng.standard_normal(d)) @ v.conj().T
    H = ev.HamiltonianSchedule(n, lambda t: np.cos(2 * t) * a)
    E = ev.NoiseSchedule.constant([0.5 * L])
    rho0 = q.random_density_matrix(n, rng)
    plain = ev.lindblad_evolve(rho0, H, E, 100).final
    K = ev.SmoothingKernel.raised_cosine(float(rng.uniform(0.1, 1.0)))
    smooth = ev.smoothed_lindblad_evolve(rho0, H, E, K, 100).final
    assert np.max(np.abs(smooth - plain)) <= 1e-8


def test_narrowing_kernel_converges_to_lindblad():
    H = ev.HamiltonianSchedule.constant(2.0 * q.X)
    E = ev.NoiseSchedule.constant([q.Z], rate=0.5)
    rho0 = q.pure(q.ket("0"))
    plain = ev.lindblad_evolve(rho0, H, E, 400).final
    d = []
    for width in (0.2, 0.1, 0.05):
        res = ev.smoothed_lindblad_evolve(rho0, H, E, ev.SmoothingKernel.raised_cosine(width), 400)
        d.append(q.trace_distance(res.final, plain))
    assert d[0] > d[1] > d[2]
    # first-order approach: halving the width roughly halves the gap
    assert d[1] / d[0] < 0.75 and d[2] / d[1] < 0.75


def test_kernel_errors():
    with pytest.raises(ValueError):
        ev.SmoothingKernel.raised_cosine(0.0)
    K = ev.SmoothingKernel.raised_cosine(0.5)
    assert K.kbar(1.0) == pytest.approx(0.5)


# -- discrete smoothing and the alternating example --------------------------

def test_discrete_single_step_is_unchanged():
    grid = ev.PropagatorGrid.from_steps([ev.x_rot(0.3)])
    base = ev.random_z_channel(0.4)
    out = ev.discrete_smoothed_noise(1, [base], grid, ev.SmoothingKernel.raised_cosine(0.5))
    rho = q.random_density_matrix(1, np.random.default_rng(0))
    assert np.allclose(out(rho), base(rho))


def test_discrete_identity_channels_stay_identity():
    T = 12
    grid = ev.PropagatorGrid.from_steps([ev.x_rot(0.2)] * T)
    ident = [ch.identity_channel(1)] * T
    rho = q.random_density_matrix(1, np.random.default_rng(1))
    for t in (1, 6, 12):
        for mode in ("causal", "full_interval"):
            out = ev.discrete_smoothed_noise(t, ident, grid, ev.SmoothingKernel.flat(), mode)
            assert np.allclose(out(rho), rho)
    with pytest.raises(ValueError):
        ev.discrete_smoothed_noise(13, ident, grid, ev.SmoothingKernel.flat())


def test_alternating_without_noise_is_pure_rotation():
    run = ev.alternating_sequence(10, 0, 30)
    rho0 = q.pure(q.ket("0"))
    u = np.linalg.matrix_power(ev.x_rot(np.deg2rad(10)), 30)
    assert np.allclose(run.result.final, u @ rho0 @ u.conj().T)
    assert q.purity(run.result.final) == pytest.approx(1.0)


def test_alternating_averaged_bit_survival():
    run = ev.alternating_sequence(10, 20, 100)
    assert run.bit_survival_fidelity() >= 0.5
    assert 0.0 <= run.state_fidelity() <= 1.0


def test_unitary_samples_average_to_the_channel():
    exact = ev.alternating_sequence(10, 20, 100).result.final
    seeds = np.random.SeedSequence(2024).generate_state(10_000)
    mean = sum(ev.alternating_sequence(10, 20, 100, "unitary_sample", seed=int(s)).result.final
               for s in seeds) / len(seeds)
    assert q.trace_distance(mean, exact) <= 0.02


def test_alternating_variant_errors():
    with pytest.raises(ValueError):
        ev.alternating_sequence(10, 20, 0)
    with pytest.raises(ValueError):
        ev.alternating_sequence(10, 20, 5, variant="mystery")


def test_discrete_and_continuous_kuperberg_agree():
    K = ev.SmoothingKernel.raised_cosine(0.25)
    disc = ev.alternating_sequence(10, 20, 100, "smoothed", kernel=K).result.final
    H, E = ev.kuperberg_lindblad_model(10, 20, 100)
    cont = ev.smoothed_lindblad_evolve(q.pure(q.ket("0")), H, E, K, 1000).final
    assert q.trace_distance(disc, cont) <= 0.1
    assert q.trace_distance(cont, q.maximally_mixed(1)) <= 0.05


def test_superoperator_matches_kraus_action():
    c = ev.random_z_channel(0.3)
    rho = q.random_density_matrix(1, np.random.default_rng(8))
    assert np.allclose(ev._apply_super(ev.superoperator(c), rho), c(rho))
