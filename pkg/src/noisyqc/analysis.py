"""
Diagnostics for correlated noise, entanglement and noncommutativity.

These are measurement harnesses: they compute and report quantities
(synchronization tails, correlation/tail bounds, entanglement of pairs,
inequality slacks) and never assert that a conjectured inequality holds.
"""

from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np
from scipy.linalg import expm, logm
from scipy.optimize import minimize

from . import channels as ch
from . import qmath

# -- synchronization ---------------------------------------------------------

DEFAULT_C1 = 10.0
DEFAULT_C2 = 0.1
DEFAULT_DELTA = 0.1
DEFAULT_EPS0 = 0.01


@dataclass
class SyncReport:
    f: list
    alpha: float
    tails: list
    synchronized: bool
    very_strong: bool
    witness_s: int | None
    constants: dict

    def to_dict(self):
        return asdict(self)


def sync_report(syndrome, c1=DEFAULT_C1, c2=DEFAULT_C2, delta=DEFAULT_DELTA):
    """Flag error synchronization from the weight profile of a syndrome.

    ``alpha`` is the expected number of faulty qubits. A tail ``f(>= s)`` is
    substantial when it reaches ``c2 * alpha / s``. Synchronization needs a
    substantial tail at some ``s >= max(2, c1 * alpha)``; the very strong form
    needs one at ``s = ceil((3/4 - delta) n)``.
    """
    prof = syndrome if isinstance(syndrome, ch.WeightProfile) else ch.weight_profile(syndrome)
    n, alpha = prof.n_qubits, prof.alpha
    tails = [prof.tail(s) for s in range(1, n + 1)]
    witness = None
    if alpha > 0:
        s_min = max(2, int(np.ceil(c1 * alpha)))
        for s in range(s_min, n + 1):
            if tails[s - 1] >= c2 * alpha / s:
                witness = s
                break
    s_strong = max(1, int(np.ceil((0.75 - delta) * n)))
    very_strong = alpha > 0 and tails[s_strong - 1] >= c2 * alpha / s_strong
    return SyncReport(prof.f.tolist(), alpha, tails, witness is not None, bool(very_strong), witness,
                      {"c1": c1, "c2": c2, "delta": delta})


# -- tail bound for correlated bits ------------------------------------------

@dataclass
class Cor2qReport:
    eta: float
    s: float
    mode: str
    checked: int = 0
    skipped: int = 0
    passed: int = 0
    min_margin: float | None = None
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def prop_cor2q_check(family, eta, s, mode="pearson", max_notes=20):
    """Check ``P(sum x_i > s n / 2) > s eta / 4`` on every qualifying member.

    A member qualifies when every marginal is at least ``eta`` and every
    pairwise correlation (in ``mode``) is at least ``s``. Tails are exact sums
    over the enumerated distribution.
    """
    if not (eta < 1 / 20 and s > 4 * eta):
        raise ValueError("hypotheses need eta < 1/20 and s > 4 eta")
    rep = Cor2qReport(eta, s, mode)
    bound = s * eta / 4
    for k, dist in enumerate(family):
        n = dist.n_qubits
        r = ch.qubit_fault_rates(dist)
        cor = ch.correlation_matrix(dist, mode)
        off = cor[~np.eye(n, dtype=bool)]
        if np.any(r < eta) or np.any(np.isnan(off)) or np.any(off < s):
            rep.skipped += 1
            if len(rep.notes) < max_notes:
                finite = off[~np.isnan(off)]
                min_cor = finite.min() if finite.size else float("nan")
                rep.notes.append(f"member {k}: hypotheses not met (min p={r.min():.4g}, "
                                 f"min cor={min_cor:.4g})")
            continue
        rep.checked += 1
        counts = ch.bit_table(n).sum(axis=1)
        tail = float(dist.probs[counts > s * n / 2].sum())
        margin = tail - bound
        rep.min_margin = margin if rep.min_margin is None else min(rep.min_margin, margin)
        if tail > bound:
            rep.passed += 1
        else:
            rep.violations.append({"member": k, "n": n, "tail": tail, "bound": bound,
                                   "min_rate": float(r.min()), "min_cor": float(off.min()),
                                   "probs": dist.probs.tolist()})
    return rep


def all_or_nothing(n, q):
    probs = np.zeros(2**n)
    probs[0], probs[-1] = 1 - q, q
    return ch.CoarseSyndrome(n, probs)


def independent_bits(ps):
    n = len(ps)
    bits = ch.bit_table(n)
    ps = np.asarray(ps, dtype=float)
    probs = np.prod(np.where(bits == 1, ps, 1 - ps), axis=1)
    return ch.CoarseSyndrome(n, probs)


def block_synchronized(n, q, block):
    """All qubits in ``block`` flip together with probability ``q``."""
    probs = np.zeros(2**n)
    idx = sum(1 << (n - 1 - b) for b in block)
    probs[0], probs[idx] = 1 - q, q
    return ch.CoarseSyndrome(n, probs)


def all_or_nothing_family(ns, qs):
    for n in ns:
        for q in qs:
            yield all_or_nothing(n, q)


def random_mixture_family(n, count, rng):
    """Random mixtures of synchronized, block-synchronized and independent components."""
    for _ in range(count):
        m = int(rng.integers(2, 5))
        weights = rng.dirichlet(np.ones(m))
        probs = np.zeros(2**n)
        for w in weights:
            kind = rng.integers(3)
            if kind == 0:
                comp = all_or_nothing(n, rng.uniform(0.0, 1.0))
            elif kind == 1:
                size = int(rng.integers(2, n + 1))
                block = rng.choice(n, size=size, replace=False)
                comp = block_synchronized(n, rng.uniform(0.0, 1.0), block)
            else:
                comp = independent_bits(rng.uniform(0.0, 0.5, size=n))
            probs += w * comp.probs
        yield ch.CoarseSyndrome(n, probs)


# -- random unitaries --------------------------------------------------------

@dataclass
class HaarWeightStats:
    n: int
    samples: int
    theta: list
    alpha_fraction: list
    conditional_mean: list
    conditional_std: list
    normalization_error: float
    weight_histogram: list
    failures: list

    @property
    def mean_conditional_weight(self):
        vals = [v for v in self.conditional_mean if v is not None]
        return float(np.mean(vals)) if vals else None

    def to_dict(self):
        d = asdict(self)
        d["mean_conditional_weight"] = self.mean_conditional_weight
        return d


def _pauli_probs(u):
    n = qmath.n_qubits_of(u)
    return np.abs(qmath.pauli_coefficients(u)) ** 2 / 4**n


def haar_weight_experiment(n, target_alpha_fraction=None, samples=200, seed=0, bisection_steps=40):
    """Pauli-weight statistics of Haar unitaries, optionally pulled toward the identity.

    With a target, ``U(theta) = exp(theta log U)`` is bisected on ``theta``
    until ``alpha / n`` matches the target. Conditional statistics are over
    the non-identity part of the syndrome.
    """
    if n > 10 or samples < 1:
        raise ValueError("need n <= 10 and samples >= 1")
    weights = qmath.word_weights(n)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(samples)]
    thetas, fracs, cmeans, cstds, fails = [], [], [], [], []
    hist = np.zeros(n + 1)
    norm_err = 0.0
    for k, rng in enumerate(rngs):
        u = qmath.haar_unitary(2**n, rng)
        theta = 1.0
        if target_alpha_fraction is not None:
            gen = logm(u)

            def frac(th):
                return float(_pauli_probs(expm(th * gen)) @ weights) / n

            lo, hi = 0.0, 1.0
            if frac(hi) < target_alpha_fraction:
                fails.append({"sample": k, "reason": "target above the full-unitary alpha"})
            else:
                for _ in range(bisection_steps):
                    mid = 0.5 * (lo + hi)
                    lo, hi = (mid, hi) if frac(mid) < target_alpha_fraction else (lo, mid)
                theta = 0.5 * (lo + hi)
            u = expm(theta * gen)
        p = _pauli_probs(u)
        norm_err = max(norm_err, abs(p.sum() - 1))
        hist += np.bincount(weights, weights=p, minlength=n + 1)
        thetas.append(theta)
        fracs.append(float(p @ weights) / n)
        mass = p[1:].sum()
        if mass > 1e-14:
            cm = float(p[1:] @ weights[1:]) / mass
            cmeans.append(cm)
            cstds.append(float(np.sqrt(max(p[1:] @ weights[1:] ** 2 / mass - cm**2, 0.0))))
        else:
            cmeans.append(None)
            cstds.append(None)
    return HaarWeightStats(n, samples, thetas, fracs, cmeans, cstds, float(norm_err),
                           (hist / samples).tolist(), fails)


def haar_expected_weight_histogram(n):
    """Mean mass on each Pauli weight for a Haar unitary: ``C(n,s) 3^s / 4^n``."""
    return np.array([comb(n, s) * 3**s for s in range(n + 1)], dtype=float) / 4**n


# -- entanglement ------------------------------------------------------------

_PAULI4 = np.stack([qmath.I2, qmath.X, qmath.Y, qmath.Z])


def _correlation_tensor(rho2):
    """``T[mu, nu] = tr(rho sigma_mu (x) sigma_nu)`` for a two-qubit state."""
    return np.real(np.einsum("ij,mnji->mn", rho2,
                             np.einsum("mab,ncd->mnacbd", _PAULI4, _PAULI4).reshape(4, 4, 4, 4)))


def _from_correlation_tensor(t):
    ops = np.einsum("mab,ncd->mnacbd", _PAULI4, _PAULI4).reshape(4, 4, 4, 4)
    return np.einsum("mn,mnij->ij", t, ops) / 4


def _unpack(params, terms):
    p = params.reshape(terms, 5)
    logits = p[:, 4]
    w = np.exp(logits - logits.max())
    w /= w.sum()

    def bloch(th, ph):
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    a, b = bloch(p[:, 0], p[:, 1]), bloch(p[:, 2], p[:, 3])
    return w, a, b, p


def _sep_objective(params, target, terms):
    """Squared Frobenius distance to a product mixture, with its gradient."""
    w, a, b, p = _unpack(params, terms)
    ua = np.hstack([np.ones((terms, 1)), a])
    ub = np.hstack([np.ones((terms, 1)), b])
    t = np.einsum("m,mi,mj->ij", w, ua, ub)
    g = t - target
    val = 0.25 * np.sum(g**2)
    dT = 0.5 * g
    # d/dw_m and the softmax chain
    dw = np.einsum("ij,mi,mj->m", dT, ua, ub)
    dlogit = w * (dw - np.dot(w, dw))
    da = w[:, None] * (ub @ dT.T)[:, 1:]
    db = w[:, None] * (ua @ dT)[:, 1:]
    th_a, ph_a, th_b, ph_b = p[:, 0], p[:, 1], p[:, 2], p[:, 3]

    def angle_grads(d, th, ph):
        dth = d[:, 0] * np.cos(th) * np.cos(ph) + d[:, 1] * np.cos(th) * np.sin(ph) - d[:, 2] * np.sin(th)
        dph = -d[:, 0] * np.sin(th) * np.sin(ph) + d[:, 1] * np.sin(th) * np.cos(ph)
        return dth, dph

    g_tha, g_pha = angle_grads(da, th_a, ph_a)
    g_thb, g_phb = angle_grads(db, th_b, ph_b)
    grad = np.stack([g_tha, g_pha, g_thb, g_phb, dlogit], axis=1).ravel()
    return val, grad


def separable_distance_upper(rho2, terms=16, restarts=20, seed=0, tol=1e-6):
    """Best trace distance from ``rho2`` to a mixture of ``terms`` product states."""
    target = _correlation_tensor(rho2)
    best = np.inf
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        x0 = np.concatenate([rng.uniform(0, np.pi, (terms, 1)), rng.uniform(0, 2 * np.pi, (terms, 1)),
                             rng.uniform(0, np.pi, (terms, 1)), rng.uniform(0, 2 * np.pi, (terms, 1)),
                             rng.normal(0, 0.1, (terms, 1))], axis=1).ravel()
        res = minimize(_sep_objective, x0, args=(target, terms), jac=True, method="L-BFGS-B",
                       options={"maxiter": 2000, "gtol": tol * 1e-3, "ftol": 1e-16})
        w, a, b, _ = _unpack(res.x, terms)
        ua = np.hstack([np.ones((terms, 1)), a])
        ub = np.hstack([np.ones((terms, 1)), b])
        sigma = _from_correlation_tensor(np.einsum("m,mi,mj->ij", w, ua, ub))
        best = min(best, qmath.trace_distance(rho2, sigma))
        if best <= tol:
            break
    return float(best)


@dataclass
class EntanglementReport:
    pair: tuple
    negativity: float
    sep_distance_upper: float
    entropy_if_pure: float | None

    @property
    def distance_to_separable(self):
        """Zero on PPT pairs (exact for two qubits), else the optimizer's bound."""
        return 0.0 if self.negativity <= 1e-10 else self.sep_distance_upper

    def to_dict(self):
        d = asdict(self)
        d["distance_to_separable"] = self.distance_to_separable
        return d


def pair_entanglement(rho, i, j, restarts=20, terms=16, seed=0):
    rho = np.asarray(rho, dtype=complex)
    n = qmath.n_qubits_of(rho)
    if n < 2 or i == j:
        raise ValueError("pair_entanglement needs two distinct qubits of a register with n >= 2")
    red = qmath.partial_trace(rho, [i, j])
    if i > j:
        swap = np.eye(4)[[0, 2, 1, 3]]
        red = swap @ red @ swap
    neg = qmath.negativity(red, [1])
    dist = separable_distance_upper(red, terms, restarts, seed)
    ent_pure = None
    if abs(qmath.purity(red) - 1) <= 1e-8:
        ent_pure = qmath.von_neumann_entropy(qmath.partial_trace(red, [0]))
    return EntanglementReport((i, j), neg, dist, ent_pure)


def _pair_entanglement_value(rho2):
    if abs(qmath.purity(rho2) - 1) <= 1e-8:
        return qmath.von_neumann_entropy(qmath.partial_trace(rho2, [0]))
    return qmath.negativity(rho2, [1])


def _measurement_basis(theta, phi):
    """Rows are the bras of the projective measurement along (theta, phi)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m0 = np.array([c, np.exp(1j * phi) * s])
    m1 = np.array([-np.exp(-1j * phi) * s, c])
    return np.stack([m0.conj(), m1.conj()])


def conditional_pair_states(rho, i, j, angles):
    """Outcome probabilities and normalized pair states after measuring the others."""
    n = qmath.n_qubits_of(rho)
    others = [q for q in range(n) if q not in (i, j)]
    t = np.asarray(rho, dtype=complex).reshape((2,) * (2 * n))
    for q, (th, ph) in zip(others, np.asarray(angles).reshape(-1, 2)):
        w = _measurement_basis(th, ph)
        t = np.moveaxis(np.tensordot(w, t, axes=([1], [q])), 0, q)
        t = np.moveaxis(np.tensordot(w.conj(), t, axes=([1], [n + q])), 0, n + q)
    m = len(others)
    order = others + [i, j] + [n + q for q in others] + [n + i, n + j]
    t = np.transpose(t, order).reshape(2**m, 4, 2**m, 4)
    blocks = t[np.arange(2**m), :, np.arange(2**m), :]
    probs = np.real(np.einsum("kii->k", blocks))
    return probs, blocks


def _emergent_objective(angles, rho, i, j):
    probs, blocks = conditional_pair_states(rho, i, j, angles)
    val = 0.0
    for p, b in zip(probs, blocks):
        if p > 1e-12:
            val += p * _pair_entanglement_value(b / p)
    return val


def emergent_entanglement(rho, i, j, restarts=8, seed=0, return_trace=False):
    """Best expected pair entanglement over local projective measurements of the rest.

    Restart ``r`` starts from ``default_rng([seed, r])``, so the running best
    over restarts is reproducible and nondecreasing.
    """
    rho = np.asarray(rho, dtype=complex)
    n = qmath.n_qubits_of(rho)
    if n < 3:
        raise ValueError("emergent entanglement needs at least three qubits")
    m = n - 2
    best, trace = 0.0, []
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        x0 = np.column_stack([rng.uniform(0, np.pi, m), rng.uniform(0, 2 * np.pi, m)]).ravel()
        res = minimize(lambda x: -_emergent_objective(x, rho, i, j), x0, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000 * m, "adaptive": True})
        best = max(best, -float(res.fun), _emergent_objective(x0, rho, i, j))
        trace.append(best)
    return (best, trace) if return_trace else best


# -- conjectured inequality harness ------------------------------------------

def default_k(x, y, scale=10.0):
    return scale * min(x, y)


def conjectureA_report(E, rho, i, j, K=default_k, mode="pearson", restarts=20, seed=0):
    """Measure ``cor_ij(E)``, ``r_i``, ``r_j``, ``Ent(rho: i, j)`` and the slack ``cor - K(r_i, r_j) Ent``."""
    if i == j:
        raise ValueError("need two distinct qubits")
    coarse = ch.coarse_syndrome(ch.chi_diagonal(E))
    rates = ch.qubit_fault_rates(coarse)
    cor = ch.pair_correlation(coarse, i, j, mode)
    ent = pair_entanglement(rho, i, j, restarts=restarts, seed=seed)
    k = float(K(rates[i], rates[j]))
    ent_val = ent.distance_to_separable
    return {
        "pair": [i, j],
        "mode": mode,
        "cor": float(cor),
        "r_i": float(rates[i]),
        "r_j": float(rates[j]),
        "K": k,
        "ent": ent_val,
        "negativity": ent.negativity,
        "slack": float(cor) - k * ent_val,
    }


# -- threshold-theorem signatures --------------------------------------------

@dataclass
class ThresholdReport:
    alpha: float
    degenerate: bool
    fit_ok: bool
    decay_rate: float | None
    fit_residual: float | None
    fit_points: int
    independent_pair_fraction: float | None
    undefined_pairs: int
    eps0: float
    mode: str

    def to_dict(self):
        return asdict(self)


def threshold_compatibility_report(syndrome, eps0=DEFAULT_EPS0, mode="pearson"):
    """Exponential-decay fit of ``f(s)`` above ``alpha`` and the near-independent pair fraction."""
    prof = ch.weight_profile(syndrome)
    coarse = ch.coarse_syndrome(syndrome) if isinstance(syndrome, ch.RichSyndrome) else syndrome
    n, alpha = prof.n_qubits, prof.alpha
    s = np.arange(n + 1)
    sel = (s > alpha) & (prof.f > 1e-300)
    fit_ok, rate, resid = False, None, None
    if sel.sum() >= 2 and alpha > 0:
        coef, res, *_ = np.polyfit(s[sel], np.log(prof.f[sel]), 1, full=True)
        rate = float(-coef[0])
        pred = np.polyval(coef, s[sel])
        resid = float(np.sqrt(np.mean((np.log(prof.f[sel]) - pred) ** 2)))
        fit_ok = True
    cor = ch.correlation_matrix(coarse, mode)
    off = cor[np.triu_indices(n, 1)]
    defined = off[~np.isnan(off)]
    frac = float(np.mean(np.abs(defined) <= eps0)) if defined.size else None
    return ThresholdReport(alpha, alpha == 0, fit_ok, rate, resid, int(sel.sum()), frac,
                           int(np.isnan(off).sum()), eps0, mode)


# -- noncommutativity --------------------------------------------------------

def noncommutativity_index(H, t0, t1, m=16, eps=1e-12):
    """Largest ``||[H_s, H_s']|| / (2 ||H_s|| ||H_s'|| + eps)`` over ``m`` sampled times.

    Operator norms; the factor 2 makes the index lie in [0, 1].
    """
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    hs = [H(t) for t in np.linspace(t0, t1, m)]
    norms = [np.linalg.norm(h, 2) for h in hs]
    best = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            if norms[a] == 0 or norms[b] == 0:
                continue
            c = hs[a] @ hs[b] - hs[b] @ hs[a]
            best = max(best, np.linalg.norm(c, 2) / (2 * norms[a] * norms[b] + eps))
    return float(best)
