"""
Codeword-mixture experiment: encoded qubits under smoothed versus local noise.

Each trajectory runs ``steps`` cycles of an intended logical rotation
``V = exp(-i phi Xbar)`` on an encoded ``|0>_L``. Per cycle a single-qubit
Pauli fault occurs with probability ``fault_rate``. In the Markovian arm the
fault acts as drawn; in the smoothed arm the fault is first carried from a
kernel-sampled earlier cycle ``s`` to the current cycle ``t`` by
``V^(t-s)``, which is how the smoothed noise channel acts on a sampled
trajectory. After every fault the stabilizer syndrome is measured (outcome
sampled with its Born probability) and the lookup correction applied. At the
end the intended rotation is undone and the logical Bloch vector recorded.

Arms are matched on the time-averaged expected number of faulty qubits
``alpha`` of the per-cycle noise channel, computed from its chi diagonal.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import channels as ch
from . import codes as cd
from . import qmath
from .evolve import SmoothingKernel

THREADS_ENV = "NOISYQC_THREADS"


def worker_count(default=1):
    try:
        return max(1, int(os.environ.get(THREADS_ENV, default)))
    except ValueError:
        return default


def trajectory_rngs(seed, count):
    """Stream ``i`` is ``SeedSequence(seed).spawn(count)[i]``, independent of scheduling."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(count)]


def ordered_map(fn, items, workers=None):
    """``[fn(x) for x in items]`` run on a thread pool; output order is input order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class Conjecture1Setup:
    code: cd.StabilizerCode
    steps: int
    fault_rate: float
    angle: float
    kernel: SmoothingKernel
    logical_index: int = 0

    @property
    def n(self):
        return self.code.n_physical

    def power(self, k):
        """``V^k = cos(k phi) I - i sin(k phi) Xbar`` since ``Xbar^2 = I``."""
        xbar = qmath.pauli_matrix(self.code.logical_x[self.logical_index])
        a = k * self.angle / self.steps
        return np.cos(a) * np.eye(xbar.shape[0]) - 1j * np.sin(a) * xbar

    def step_unitary(self):
        return self.power(1)

    @cached_property
    def powers(self):
        return [self.power(k) for k in range(self.steps + 1)]

    def kernel_weights(self, t):
        """Causal weights over earlier cycles ``s = 1..t`` for cycle ``t``."""
        offs = (t - np.arange(1, t + 1)) / self.steps
        w = self.kernel.values(offs)
        if w.sum() <= 0:
            w = np.zeros(t)
            w[-1] = 1.0
        return w / w.sum()


def single_fault_words(n):
    return ["I" * q + c + "I" * (n - q - 1) for q in range(n) for c in "XYZ"]


def local_fault_channel(n, rate):
    """One uniformly chosen single-qubit Pauli fault with probability ``rate``."""
    words = single_fault_words(n)
    weights = {"I" * n: 1 - rate}
    weights.update({w: rate / len(words) for w in words})
    return ch.pauli_mixture(weights)


def smoothed_alpha(setup):
    """Per-cycle ``alpha`` of the smoothed noise channel, for cycles ``1..steps``."""
    n = setup.n
    weights = qmath.word_weights(n)
    # Pauli weight carried by a fault conjugated over a lag of k cycles
    lag_alpha = {}
    out = []
    for t in range(1, setup.steps + 1):
        w = setup.kernel_weights(t)
        a = 0.0
        for s, ws in zip(range(1, t + 1), w):
            k = t - s
            if ws == 0:
                continue
            if k not in lag_alpha:
                u = setup.powers[k]
                ud = u.conj().T
                acc = 0.0
                for f in single_fault_words(n):
                    p = np.abs(qmath.pauli_coefficients(u @ qmath.apply_pauli(f, ud))) ** 2 / 4**n
                    acc += p @ weights
                lag_alpha[k] = acc / (3 * n)
            a += ws * lag_alpha[k]
        out.append(setup.fault_rate * a)
    return np.array(out)


def smoothed_channel(setup, t):
    """The smoothed per-cycle noise channel at cycle ``t`` as an explicit Kraus mixture."""
    base = local_fault_channel(setup.n, setup.fault_rate)
    w = setup.kernel_weights(t)
    parts = [ch.conjugate_channel(setup.powers[t - s], base) for s in range(1, t + 1)]
    return ch.mixture([p for p, x in zip(parts, w) if x > 0], w[w > 0])


def measure_and_correct(code, psi, rng):
    """Sample a syndrome outcome for a pure state and apply its recovery."""
    amps = code.syndrome_bases.conj().transpose(0, 2, 1) @ psi
    probs = np.sum(np.abs(amps) ** 2, axis=1)
    k = int(rng.choice(len(probs), p=probs / probs.sum()))
    return code.encoder @ (amps[k] / np.sqrt(probs[k]))


def run_trajectory(setup, arm, rng):
    code, n, T = setup.code, setup.n, setup.steps
    powers = setup.powers
    v = powers[1]
    psi = code.encoder[:, 0].copy()
    words = single_fault_words(n)
    faults = 0
    for t in range(1, T + 1):
        psi = v @ psi
        if rng.random() < setup.fault_rate:
            faults += 1
            word = words[int(rng.integers(len(words)))]
            if arm == "smoothed":
                s = 1 + int(rng.choice(t, p=setup.kernel_weights(t)))
                u = powers[t - s]
                psi = u @ qmath.apply_pauli(word, u.conj().T @ psi)
            elif arm == "markovian":
                psi = qmath.apply_pauli(word, psi)
            else:
                raise ValueError(f"unknown arm {arm!r}")
            psi = measure_and_correct(code, psi, rng)
    psi = powers[T].conj().T @ psi
    return cd.analyze_code_state(code, np.outer(psi, psi.conj())), faults


def run_arm(setup, arm, trajectories, seed, workers=None):
    rngs = trajectory_rngs(seed, trajectories)
    out = ordered_map(lambda rng: run_trajectory(setup, arm, rng), rngs, workers)
    return [a for a, _ in out], [f for _, f in out]


def conjecture1_experiment(code, steps=20, fault_rate=0.02, angle=np.pi / 2, kernel_width=0.5,
                           trajectories=100, seed=0, workers=None, alpha_tol=0.05):
    """Run both arms at matched alpha and report the logical spread ratio."""
    kernel = SmoothingKernel.raised_cosine(kernel_width)
    smooth = Conjecture1Setup(code, steps, fault_rate, angle, kernel)
    alpha_s = smoothed_alpha(smooth) if fault_rate > 0 else np.zeros(steps)
    target = float(alpha_s.mean())
    # a single-fault local channel has alpha equal to its fault rate
    markov = Conjecture1Setup(code, steps, min(target, 1.0), angle, kernel)
    alpha_m = ch.weight_profile(ch.chi_diagonal(local_fault_channel(code.n_physical, markov.fault_rate))).alpha
    rel = abs(alpha_m - target) / target if target > 0 else 0.0
    seeds = np.random.SeedSequence(seed).spawn(2)
    runs_s, faults_s = run_arm(smooth, "smoothed", trajectories, seeds[0], workers)
    runs_m, faults_m = run_arm(markov, "markovian", trajectories, seeds[1], workers)
    rep_s = cd.codeword_mixture_report(runs_s)
    rep_m = cd.codeword_mixture_report(runs_m)
    return {
        "code": code.name,
        "alpha_smoothed": target,
        "alpha_smoothed_per_cycle": alpha_s.tolist(),
        "alpha_markovian": alpha_m,
        "alpha_relative_mismatch": rel,
        "alpha_matched": bool(rel <= alpha_tol),
        "markovian_fault_rate": markov.fault_rate,
        "smoothed": rep_s.to_dict() | {"spread": rep_s.spread, "mean_faults": float(np.mean(faults_s))},
        "markovian": rep_m.to_dict() | {"spread": rep_m.spread, "mean_faults": float(np.mean(faults_m))},
        "spread_ratio": cd.spread_ratio(rep_s, rep_m),
    }
