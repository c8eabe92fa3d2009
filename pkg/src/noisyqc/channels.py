"""
Kraus channels and their multi-Pauli error syndromes.

A channel's rich syndrome is the diagonal of its chi matrix in the Pauli
basis, ``p_w = sum_k |tr(P_w A_k)|^2 / 4^n``. For a trace-preserving channel
these are probabilities; pushing them forward through the letter map
``I -> 0, {X, Y, Z} -> 1`` gives the coarse syndrome over bitstrings, from
which the weight profile ``f(s)``, the expected number of faulty qubits
``alpha`` and per-qubit fault rates / pairwise correlations follow.
"""

import json
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import qmath
from .qmath import DimensionError, n_qubits_of

MAX_ENUM_QUBITS = 12


@dataclass(frozen=True)
class KrausChannel:
    kraus_ops: tuple
    trace_preserving: bool = True

    def __post_init__(self):
        ops = tuple(np.asarray(a, dtype=complex) for a in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        n = n_qubits_of(ops[0])
        if any(a.shape != ops[0].shape for a in ops):
            raise DimensionError("Kraus operators have inconsistent shapes")
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "_n", n)

    @property
    def n_qubits(self):
        return self._n

    @property
    def dim(self):
        return 2**self._n

    def __call__(self, rho):
        return apply_channel(self, rho)

    def __len__(self):
        return len(self.kraus_ops)


@dataclass(frozen=True)
class CPTPReport:
    deviation: float
    tol: float

    @property
    def passed(self):
        return self.deviation <= self.tol


@dataclass
class RichSyndrome:
    """Probabilities over Pauli words, stored densely in word-index order."""

    n_qubits: int
    probs: np.ndarray

    def __getitem__(self, word):
        return float(self.probs[qmath.index_from_word(word)])

    def items(self, cutoff=0.0):
        for idx in np.flatnonzero(self.probs > cutoff):
            yield qmath.word_from_index(int(idx), self.n_qubits), float(self.probs[idx])

    def to_json(self, cutoff=0.0):
        return json.dumps({
            "n": self.n_qubits,
            "entries": [{"word": w, "p": p} for w, p in self.items(cutoff)],
        })

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls.from_dict(doc["n"], {e["word"]: e["p"] for e in doc["entries"]})

    @classmethod
    def from_dict(cls, n, weights):
        probs = np.zeros(4**n)
        for w, p in weights.items():
            if len(w) != n:
                raise ValueError(f"word {w!r} does not have length {n}")
            probs[qmath.index_from_word(w)] += p
        return cls(n, probs)


@dataclass
class CoarseSyndrome:
    """Probabilities over bitstrings; bit ``i`` of a string is qubit ``i``."""

    n_qubits: int
    probs: np.ndarray

    def __getitem__(self, bits):
        return float(self.probs[int(bits, 2)])

    def items(self, cutoff=0.0):
        n = self.n_qubits
        for idx in np.flatnonzero(self.probs > cutoff):
            yield format(int(idx), f"0{n}b"), float(self.probs[idx])

    def to_json(self, cutoff=0.0):
        return json.dumps({
            "n": self.n_qubits,
            "entries": [{"bits": b, "p": p} for b, p in self.items(cutoff)],
        })

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls.from_dict(doc["n"], {e["bits"]: e["p"] for e in doc["entries"]})

    @classmethod
    def from_dict(cls, n, weights):
        probs = np.zeros(2**n)
        for b, p in weights.items():
            if len(b) != n:
                raise ValueError(f"bitstring {b!r} does not have length {n}")
            probs[int(b, 2)] += p
        return cls(n, probs)

    def bit_table(self):
        """``(2**n, n)`` 0/1 matrix: row ``x`` holds the bits of index ``x``."""
        return bit_table(self.n_qubits)


@dataclass
class WeightProfile:
    f: np.ndarray
    alpha: float = field(init=False)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.alpha = float(np.dot(np.arange(len(self.f)), self.f))

    @property
    def n_qubits(self):
        return len(self.f) - 1

    def tail(self, s):
        """``f(>= s)``."""
        return float(np.sum(self.f[max(int(s), 0):]))


def bit_table(n):
    idx = np.arange(2**n)
    shifts = np.arange(n - 1, -1, -1)
    return (idx[:, None] >> shifts[None, :]) & 1


# -- channel action ----------------------------------------------------------

def apply_channel(channel, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.dim, channel.dim):
        raise DimensionError(f"channel on {channel.n_qubits} qubits applied to shape {rho.shape}")
    ops = np.stack(channel.kraus_ops)
    return np.einsum("kij,jl,kml->im", ops, rho, ops.conj(), optimize=True)


def verify_cptp(channel, tol=1e-10):
    d = channel.dim
    total = sum(a.conj().T @ a for a in channel.kraus_ops)
    return CPTPReport(float(np.max(np.abs(total - np.eye(d)))), tol)


def compose(*channels):
    """Channel applying ``channels[0]`` first, then ``channels[1]``, ..."""
    ops = channels[0].kraus_ops
    for ch in channels[1:]:
        ops = tuple(b @ a for b in ch.kraus_ops for a in ops)
    return KrausChannel(ops, all(c.trace_preserving for c in channels))


def mixture(channels, weights):
    """Probabilistic mixture ``sum_i w_i E_i`` with ``w`` a probability vector."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, atol=1e-12):
        raise ValueError("mixture weights must be a probability vector")
    ops = tuple(np.sqrt(w) * a for w, ch in zip(weights, channels) if w > 0 for a in ch.kraus_ops)
    return KrausChannel(ops)


def unitary_channel(u):
    return KrausChannel((np.asarray(u, dtype=complex),))


def identity_channel(n):
    return KrausChannel((np.eye(2**n, dtype=complex),))


def conjugate_channel(u, channel):
    """``rho -> U E(U^dag rho U) U^dag``, i.e. Kraus operators ``U A_k U^dag``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (channel.dim, channel.dim):
        raise DimensionError(f"unitary of shape {u.shape} vs channel on {channel.n_qubits} qubits")
    ud = u.conj().T
    return KrausChannel(tuple(u @ a @ ud for a in channel.kraus_ops), channel.trace_preserving)


# -- noise constructors ------------------------------------------------------

def _check_rate(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def pauli_mixture(weights):
    """Channel ``rho -> sum_w p_w P_w rho P_w``."""
    if not weights:
        raise ValueError("no Pauli weights given")
    n = len(next(iter(weights)))
    for w, p in weights.items():
        if len(w) != n:
            raise ValueError(f"word {w!r} does not have length {n}")
        _check_rate(f"weight of {w}", p)
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"Pauli weights sum to {total}, not 1")
    return KrausChannel(tuple(np.sqrt(p) * qmath.pauli_matrix(w) for w, p in weights.items() if p > 0))


def independent_pauli(n, probs_xyz):
    """Each qubit independently suffers X, Y, Z with probabilities ``probs_xyz[k]``."""
    weights = {}
    for letters in product("IXYZ", repeat=n):
        p = 1.0
        for k, c in enumerate(letters):
            px, py, pz = probs_xyz[k]
            p *= {"I": 1 - px - py - pz, "X": px, "Y": py, "Z": pz}[c]
        if p > 0:
            weights["".join(letters)] = p
    return pauli_mixture(weights)


def depolarizing(p, n=1):
    _check_rate("p", p)
    return independent_pauli(n, [(p / 3, p / 3, p / 3)] * n)


def dephasing(p, n=1):
    _check_rate("p", p)
    return independent_pauli(n, [(0.0, 0.0, p)] * n)


def synchronized(n, q):
    """With probability ``q`` every qubit is hit by a uniform non-identity Pauli."""
    _check_rate("q", q)
    weights = {"I" * n: 1 - q}
    share = q / 3**n
    for letters in product("XYZ", repeat=n):
        weights["".join(letters)] = share
    return pauli_mixture(weights)


def povm_channel(effects):
    """Kraus operators ``sqrt(F_k)`` (principal square roots) of a POVM."""
    ops = []
    for f in effects:
        f = np.asarray(f, dtype=complex)
        if not qmath.is_hermitian(f):
            raise ValueError("POVM effect is not Hermitian")
        w, v = np.linalg.eigh(f)
        if w[0] < -qmath.PSD_TOL:
            raise ValueError("POVM effect is not positive semidefinite")
        ops.append((v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T)
    ch = KrausChannel(tuple(ops))
    if not verify_cptp(ch, 1e-9).passed:
        raise ValueError("POVM effects do not sum to the identity")
    return ch


def make_noise(kind, **params):
    """Build a trace-preserving noise channel by name.

    ``depolarizing`` and ``dephasing`` take ``p`` and optional ``n``;
    ``correlated_multi_pauli`` takes ``weights`` (word -> probability);
    ``povm`` takes ``effects``; ``synchronized`` takes ``n`` and ``q``.
    """
    if kind == "depolarizing":
        return depolarizing(params["p"], params.get("n", 1))
    if kind == "dephasing":
        return dephasing(params["p"], params.get("n", 1))
    if kind == "correlated_multi_pauli":
        return pauli_mixture(params["weights"])
    if kind == "povm":
        return povm_channel(params["effects"])
    if kind == "synchronized":
        return synchronized(params["n"], params["q"])
    raise ValueError(f"unknown noise kind {kind!r}")


# -- syndromes ---------------------------------------------------------------

def chi_diagonal(channel, max_qubits=MAX_ENUM_QUBITS):
    n = channel.n_qubits
    if n > max_qubits:
        raise ValueError(f"4^{n} Pauli enumeration exceeds the {max_qubits}-qubit limit")
    probs = np.zeros(4**n)
    for a in channel.kraus_ops:
        probs += np.abs(qmath.pauli_coefficients(a)) ** 2
    return RichSyndrome(n, probs / 4**n)


def _fault_index(n):
    """Bitstring index reached by each Pauli word index."""
    idx = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        idx = (2 * idx[:, None] + np.array([0, 1, 1, 1])[None, :]).ravel()
    return idx


def coarse_syndrome(rich):
    n = rich.n_qubits
    probs = np.bincount(_fault_index(n), weights=rich.probs, minlength=2**n)
    return CoarseSyndrome(n, probs)


def weight_profile(syndrome):
    """``f(s)`` from either a rich or a coarse syndrome."""
    n = syndrome.n_qubits
    if isinstance(syndrome, RichSyndrome):
        weights = qmath.word_weights(n)
    else:
        weights = bit_table(n).sum(axis=1)
    return WeightProfile(np.bincount(weights, weights=syndrome.probs, minlength=n + 1))


def qubit_fault_rates(coarse):
    return coarse.probs @ bit_table(coarse.n_qubits)


def joint_fault_rates(coarse):
    """Matrix of ``P(x_i = 1 and x_j = 1)``."""
    bits = bit_table(coarse.n_qubits).astype(float)
    return bits.T @ (coarse.probs[:, None] * bits)


class UndefinedCorrelation(ValueError):
    pass


def pair_correlation(coarse, i, j, mode="pearson"):
    if i == j:
        raise ValueError("pair_correlation needs two distinct qubits")
    n = coarse.n_qubits
    bits = bit_table(n)
    ri = float(coarse.probs @ bits[:, i])
    rj = float(coarse.probs @ bits[:, j])
    both = float(coarse.probs @ (bits[:, i] & bits[:, j]))
    cov = both - ri * rj
    if mode == "covariance":
        return cov
    if mode != "pearson":
        raise ValueError(f"unknown correlation mode {mode!r}")
    var = ri * (1 - ri) * rj * (1 - rj)
    if var <= 1e-15:
        raise UndefinedCorrelation(f"qubit marginals ({ri}, {rj}) make the correlation undefined")
    return float(np.clip(cov / np.sqrt(var), -1.0, 1.0))


def correlation_matrix(coarse, mode="pearson"):
    """All pairwise correlations; NaN where a Pearson correlation is undefined."""
    r = qubit_fault_rates(coarse)
    cov = joint_fault_rates(coarse) - np.outer(r, r)
    if mode == "covariance":
        return cov
    if mode != "pearson":
        raise ValueError(f"unknown correlation mode {mode!r}")
    sd = np.sqrt(r * (1 - r))
    with np.errstate(divide="ignore", invalid="ignore"):
        cor = cov / np.outer(sd, sd)
    cor[np.outer(sd, sd) <= np.sqrt(1e-15)] = np.nan
    return np.clip(cor, -1.0, 1.0)
