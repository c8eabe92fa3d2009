import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisyqc import analysis as an
from noisyqc import channels as ch
from noisyqc import codes as cd
from noisyqc import evolve as ev
from noisyqc import qmath as q
from oracles import binomial_pmf

seeds = st.integers(0, 2**32 - 1)


# -- synchronization ---------------------------------------------------------

def test_sync_identity():
    rep = an.sync_report(ch.chi_diagonal(ch.identity_channel(3)))
    assert rep.alpha == 0 and not rep.synchronized and not rep.very_strong


def test_sync_fully_synchronized_is_very_strong():
    n, qq = 10, 0.01
    prof = ch.WeightProfile(np.r_[1 - qq, np.zeros(n - 1), qq])
    rep = an.sync_report(prof)
    assert prof.alpha == pytest.approx(qq * n)
    assert rep.tails[n - 1] == pytest.approx(0.01)
    assert rep.tails[n - 1] >= 0.1 * prof.alpha / n
    assert rep.very_strong and rep.synchronized


def test_sync_independent_depolarizing_is_not_synchronized():
    n, p = 10, 0.01
    rep = an.sync_report(ch.WeightProfile(binomial_pmf(n, p)))
    assert not rep.synchronized and not rep.very_strong


def test_sync_report_from_channel_matches_profile():
    rich = ch.chi_diagonal(ch.synchronized(4, 0.05))
    assert an.sync_report(rich).to_dict() == an.sync_report(ch.weight_profile(rich)).to_dict()


@given(seeds)
def test_sync_tails_are_suffix_sums(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 12))
    f = rng.dirichlet(np.ones(n + 1))
    rep = an.sync_report(ch.WeightProfile(f))
    for s in range(1, n + 1):
        assert rep.tails[s - 1] == pytest.approx(float(np.sum(f[s:])), abs=1e-15)


# -- correlated-bit tail bound -----------------------------------------------

def test_cor2q_all_or_nothing_passes():
    rep = an.prop_cor2q_check([an.all_or_nothing(6, 0.05)], eta=0.04, s=0.2)
    assert rep.checked == 1 and rep.passed == 1 and not rep.violations
    assert rep.min_margin == pytest.approx(0.05 - 0.2 * 0.04 / 4)


def test_cor2q_independent_is_filtered():
    rep = an.prop_cor2q_check([an.independent_bits([0.3] * 5)], eta=0.04, s=0.2)
    assert rep.checked == 0 and rep.skipped == 1 and rep.notes


def test_cor2q_hypothesis_guard():
    with pytest.raises(ValueError):
        an.prop_cor2q_check([], eta=0.06, s=0.5)
    with pytest.raises(ValueError):
        an.prop_cor2q_check([], eta=0.04, s=0.1)


@pytest.mark.parametrize("mode", ["pearson", "covariance"])
def test_cor2q_random_family_small(mode):
    fam = an.random_mixture_family(6, 500, np.random.default_rng(1))
    rep = an.prop_cor2q_check(fam, eta=0.04, s=0.2 if mode == "pearson" else 0.17, mode=mode)
    assert rep.checked + rep.skipped == 500
    assert not rep.violations


def test_family_members_are_distributions():
    for d in an.random_mixture_family(5, 50, np.random.default_rng(2)):
        assert d.probs.sum() == pytest.approx(1.0) and np.all(d.probs >= 0)
    d = an.block_synchronized(4, 0.3, [1, 3])
    assert d["0101"] == pytest.approx(0.3)


# -- Haar statistics ---------------------------------------------------------

def test_haar_identity_limit():
    stats = an.haar_weight_experiment(3, target_alpha_fraction=0.0, samples=3, seed=1)
    assert np.allclose(stats.alpha_fraction, 0, atol=1e-9)
    assert stats.conditional_mean == [None] * 3 and stats.mean_conditional_weight is None


def test_haar_theta_zero_has_no_conditional_stats():
    stats = an.HaarWeightStats(2, 1, [0.0], [0.0], [None], [None], 0.0, [1, 0, 0], [])
    assert stats.mean_conditional_weight is None


def test_haar_target_fraction_is_hit():
    stats = an.haar_weight_experiment(3, target_alpha_fraction=0.3, samples=4, seed=2)
    assert np.allclose(stats.alpha_fraction, 0.3, atol=1e-6)
    assert all(0 < th < 1 for th in stats.theta)


def test_haar_small_n_histogram_matches_exact_mean():
    n, samples = 2, 400
    stats = an.haar_weight_experiment(n, samples=samples, seed=3)
    exact = an.haar_expected_weight_histogram(n)
    # per-sample weight masses, recomputed to get their spread
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(3).spawn(samples)]
    w = q.word_weights(n)
    masses = np.array([np.bincount(w, weights=an._pauli_probs(q.haar_unitary(4, r)), minlength=n + 1)
                       for r in rngs])
    assert np.allclose(masses.mean(axis=0), stats.weight_histogram)
    sem = masses.std(axis=0) / np.sqrt(samples)
    assert np.all(np.abs(np.asarray(stats.weight_histogram) - exact) <= 3 * sem + 1e-12)


@pytest.mark.slow
def test_haar_n8_concentration():
    stats = an.haar_weight_experiment(8, samples=200, seed=0)
    assert stats.normalization_error <= 1e-9
    assert 0.72 * 8 <= stats.mean_conditional_weight <= 0.78 * 8


def test_haar_argument_guard():
    with pytest.raises(ValueError):
        an.haar_weight_experiment(11)


# -- entanglement ------------------------------------------------------------

def test_pair_entanglement_examples():
    prod = q.kron_all([q.random_density_matrix(1, np.random.default_rng(k)) for k in range(3)])
    rep = an.pair_entanglement(prod, 0, 2, restarts=4)
    assert rep.negativity <= 1e-10 and rep.sep_distance_upper <= 1e-4
    bell = an.pair_entanglement(q.bell_state(), 0, 1, restarts=4)
    assert bell.negativity == pytest.approx(0.5)
    assert bell.sep_distance_upper > 1e-6 and bell.entropy_if_pure == pytest.approx(1.0)
    werner = an.pair_entanglement(q.werner_state(1 / 3), 0, 1)
    assert werner.negativity <= 1e-10 and werner.sep_distance_upper <= 1e-3
    assert werner.distance_to_separable == 0.0


def test_pair_entanglement_swaps_order():
    rho = np.kron(q.bell_state(), q.pure(q.ket("0")))
    a = an.pair_entanglement(rho, 0, 1, restarts=1)
    b = an.pair_entanglement(rho, 1, 0, restarts=1)
    assert a.negativity == pytest.approx(b.negativity)
    with pytest.raises(ValueError):
        an.pair_entanglement(rho, 1, 1)


def test_separable_objective_gradient():
    from scipy.optimize import check_grad
    rng = np.random.default_rng(0)
    target = an._correlation_tensor(q.random_density_matrix(2, rng))
    x0 = rng.standard_normal(5 * 4)
    err = check_grad(lambda x: an._sep_objective(x, target, 4)[0],
                     lambda x: an._sep_objective(x, target, 4)[1], x0)
    assert err <= 1e-5


@settings(max_examples=5)
@given(seeds)
def test_negativity_never_contradicts_separable_distance(seed):
    rng = np.random.default_rng(seed)
    rho = q.random_density_matrix(2, rng, rank=int(rng.integers(1, 3)))
    rep = an.pair_entanglement(rho, 0, 1, restarts=3, terms=8, seed=seed)
    if rep.negativity > 1e-6:
        assert rep.sep_distance_upper > 1e-6


def test_emergent_entanglement_examples():
    assert an.emergent_entanglement(q.ghz_state(3), 0, 1, restarts=2) >= 1 - 1e-6
    prod = q.kron_all([q.random_density_matrix(1, np.random.default_rng(k)) for k in range(3)])
    assert an.emergent_entanglement(prod, 0, 2, restarts=2) <= 1e-6
    with pytest.raises(ValueError):
        an.emergent_entanglement(q.bell_state(), 0, 1)


def test_ghz_x_measurement_gives_bell_pairs():
    probs, blocks = an.conditional_pair_states(q.ghz_state(3), 0, 1, [np.pi / 2, 0.0])
    assert np.allclose(probs, 0.5)
    for p, b in zip(probs, blocks):
        assert q.von_neumann_entropy(q.partial_trace(b / p, [0])) == pytest.approx(1.0)


def test_emergent_entanglement_monotone_in_restarts():
    rho = q.random_density_matrix(3, np.random.default_rng(4), rank=1)
    _, trace = an.emergent_entanglement(rho, 0, 2, restarts=4, seed=3, return_trace=True)
    assert all(b >= a for a, b in zip(trace, trace[1:]))
    assert an.emergent_entanglement(rho, 0, 2, restarts=2, seed=3) == pytest.approx(trace[1])


@pytest.mark.slow
def test_steane_codeword_has_emergent_entanglement():
    rho = cd.encode(cd.steane_code(), q.pure(q.ket("0")))
    # regression baseline from the optimizer: a Bell pair is reachable
    assert an.emergent_entanglement(rho, 0, 1, restarts=1) >= 1 - 1e-6


# -- conjectured inequality harness ------------------------------------------

def test_conjecture_a_independent_on_product():
    E = ch.depolarizing(0.1, 2)
    rho = q.pure(q.ket("01"))
    rep = an.conjectureA_report(E, rho, 0, 1, restarts=2)
    assert rep["cor"] == pytest.approx(0.0, abs=1e-12)
    assert rep["ent"] == 0.0 and rep["slack"] == pytest.approx(0.0, abs=1e-12)


def test_conjecture_a_correlated_on_bell():
    E = ch.pauli_mixture({"XX": 0.1, "II": 0.9})
    rep = an.conjectureA_report(E, q.bell_state(), 0, 1, restarts=4)
    assert rep["cor"] == pytest.approx(1.0)
    assert rep["ent"] > 0 and rep["slack"] > 0
    assert rep["slack"] == rep["cor"] - rep["K"] * rep["ent"]


def test_conjecture_a_independent_on_bell_has_negative_slack():
    rep = an.conjectureA_report(ch.depolarizing(0.1, 2), q.bell_state(), 0, 1, restarts=4)
    assert rep["cor"] == pytest.approx(0.0, abs=1e-12)
    assert rep["ent"] > 0 and rep["slack"] < 0
    assert rep["slack"] == rep["cor"] - rep["K"] * rep["ent"]


# -- threshold signatures ----------------------------------------------------

def test_threshold_reports():
    indep = an.threshold_compatibility_report(ch.chi_diagonal(ch.depolarizing(0.02, 5)))
    assert indep.fit_ok and indep.decay_rate > 0 and indep.independent_pair_fraction == 1.0
    sync = an.threshold_compatibility_report(ch.chi_diagonal(ch.synchronized(5, 0.02)))
    assert (not sync.fit_ok) or abs(sync.decay_rate) < 1e-6
    assert sync.independent_pair_fraction == 0.0
    ident = an.threshold_compatibility_report(ch.chi_diagonal(ch.identity_channel(3)))
    assert ident.degenerate and ident.alpha == 0


# -- noncommutativity --------------------------------------------------------

def test_noncommutativity_examples():
    assert an.noncommutativity_index(ev.HamiltonianSchedule.constant(q.X), 0, 1) == 0.0
    diag = ev.HamiltonianSchedule(2, lambda t: np.diag([t, -t, 2 * t, 0.5]).astype(complex))
    assert an.noncommutativity_index(diag, 0, 1) == pytest.approx(0.0, abs=1e-12)
    alt = ev.HamiltonianSchedule.piecewise([0.5], [q.X, q.Z])
    assert an.noncommutativity_index(alt, 0, 1) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        an.noncommutativity_index(alt, 1, 0)
