"""
Small stabilizer codes with dense encode / analyze / decode.

Codes are described by Pauli-word generators with ``+1`` signs. Dense
operators (projectors, encoders, decoders) are built lazily and only for
codes with at most ``qmath.MAX_STATE_QUBITS`` physical qubits.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import qmath
from .qmath import DimensionError


def symplectic(word):
    """``(x, z)`` bit vectors of a Pauli word."""
    x = np.array([c in "XY" for c in word], dtype=np.uint8)
    z = np.array([c in "ZY" for c in word], dtype=np.uint8)
    return x, z


def commutes(a, b):
    xa, za = symplectic(a)
    xb, zb = symplectic(b)
    return int(np.sum(xa & zb) + np.sum(za & xb)) % 2 == 0


def gf2_rank(rows):
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    for col in range(m.shape[1]):
        pivot = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank


def stabilizer_rank(words):
    return gf2_rank([np.concatenate(symplectic(w)) for w in words])


class NoCodespaceSupport(ValueError):
    pass


@dataclass(frozen=True)
class StabilizerCode:
    name: str
    n_physical: int
    generators: tuple
    logical_x: tuple
    logical_z: tuple

    @property
    def k_logical(self):
        return len(self.logical_x)

    @property
    def n_generators(self):
        return len(self.generators)

    def check(self):
        """Raise if generators or logical operators break the stabilizer algebra."""
        gens = self.generators
        for i, a in enumerate(gens):
            for b in gens[i + 1:]:
                if not commutes(a, b):
                    raise ValueError(f"generators {a} and {b} anticommute")
        if stabilizer_rank(gens) != len(gens):
            raise ValueError("generators are not independent")
        for lop in self.logical_x + self.logical_z:
            if not all(commutes(lop, g) for g in gens):
                raise ValueError(f"logical {lop} does not commute with the stabilizer")
        for i, xi in enumerate(self.logical_x):
            for j, zj in enumerate(self.logical_z):
                if commutes(xi, zj) == (i == j):
                    raise ValueError(f"logical X{i} / Z{j} have the wrong commutation")
        if self.n_physical - len(gens) != self.k_logical:
            raise ValueError("generator count does not match the number of logical qubits")

    def _require_dense(self):
        if self.n_physical > qmath.MAX_STATE_QUBITS:
            raise ValueError(f"{self.name} has {self.n_physical} qubits; dense operators are capped at "
                             f"{qmath.MAX_STATE_QUBITS}")

    @cached_property
    def generator_matrices(self):
        self._require_dense()
        return [qmath.pauli_matrix(g) for g in self.generators]

    @cached_property
    def _projector_stack(self):
        return np.stack(self.syndrome_projectors)

    @cached_property
    def projector(self):
        return self.syndrome_projectors[0]

    @cached_property
    def syndrome_projectors(self):
        """Projector for each syndrome integer; bit ``g`` (MSB first) is -1 outcome of generator ``g``."""
        self._require_dense()
        level = [np.eye(2**self.n_physical, dtype=complex)]
        # generators commute, so the factors (I +- g)/2 can be applied in any order
        for g in self.generators:
            nxt = []
            for p in level:
                gp = qmath.apply_pauli(g, p)
                nxt.extend([(p + gp) / 2, (p - gp) / 2])
            level = nxt
        return level

    @cached_property
    def encoder(self):
        """Isometry with columns ``|b>_L`` for logical basis strings ``b``."""
        self._require_dense()
        n, k = self.n_physical, self.k_logical
        zero = self.projector[:, 0]
        zero = zero / np.linalg.norm(zero)
        xs = [qmath.pauli_matrix(w) for w in self.logical_x]
        cols = []
        for b in range(2**k):
            v = zero
            for j in range(k):
                if (b >> (k - 1 - j)) & 1:
                    v = xs[j] @ v
            cols.append(v)
        return np.stack(cols, axis=1)

    @cached_property
    def logical_operators(self):
        """``[(X_j, Y_j, Z_j)]`` dense logical Paulis, ``Y_j = i X_j Z_j``."""
        out = []
        for wx, wz in zip(self.logical_x, self.logical_z):
            x, z = qmath.pauli_matrix(wx), qmath.pauli_matrix(wz)
            out.append((x, 1j * x @ z, z))
        return out

    def syndrome_of(self, word):
        """Syndrome integer of a Pauli error word."""
        s = 0
        for g in self.generators:
            s = 2 * s + (0 if commutes(word, g) else 1)
        return s

    @cached_property
    def decoding_table(self):
        """Minimum-weight Pauli correction for every syndrome (ties: lowest word index)."""
        n, m = self.n_physical, self.n_generators
        if n > qmath.MAX_STATE_QUBITS:
            raise ValueError("lookup decoding limited to small codes")
        total = 4**n
        idx = np.arange(total)
        digits = np.stack([(idx // 4 ** (n - 1 - q)) % 4 for q in range(n)], axis=1)
        ex = ((digits == 1) | (digits == 2)).astype(np.uint8)
        ez = ((digits == 3) | (digits == 2)).astype(np.uint8)
        gx = np.stack([symplectic(g)[0] for g in self.generators])
        gz = np.stack([symplectic(g)[1] for g in self.generators])
        anti = (ex @ gz.T + ez @ gx.T) % 2
        synd = anti @ (1 << np.arange(m - 1, -1, -1))
        weight = (digits != 0).sum(axis=1)
        order = np.lexsort((idx, weight))
        table = {}
        for w_idx in order:
            s = int(synd[w_idx])
            if s not in table:
                table[s] = qmath.word_from_index(int(w_idx), n)
                if len(table) == 2**m:
                    break
        return table

    @cached_property
    def syndrome_bases(self):
        """``W_s = R_s V``: orthonormal basis of syndrome space ``s`` (shape ``(2^m, 2^n, 2^k)``).

        ``R_s`` is the lookup correction, so ``R_s W_s = V`` and the decoder's
        Kraus operators are ``V W_s^dag``.
        """
        v = self.encoder
        return np.stack([qmath.apply_pauli(self.decoding_table[s], v) for s in range(2**self.n_generators)])

    @cached_property
    def _decoder_kraus(self):
        return np.einsum("ia,sja->sij", self.encoder, self.syndrome_bases.conj())

    def to_json(self):
        return json.dumps({
            "name": self.name,
            "n_physical": self.n_physical,
            "k_logical": self.k_logical,
            "generators": [{"word": g, "sign": 1} for g in self.generators],
            "logical_x": list(self.logical_x),
            "logical_z": list(self.logical_z),
        }, indent=2)


def steane_code():
    hamming = ["0001111", "0110011", "1010101"]
    xs = ["".join("X" if b == "1" else "I" for b in row) for row in hamming]
    zs = ["".join("Z" if b == "1" else "I" for b in row) for row in hamming]
    code = StabilizerCode("steane", 7, tuple(xs + zs), ("X" * 7,), ("Z" * 7,))
    code.check()
    return code


def toric_code(L):
    """Kitaev toric code with qubits on the ``2 L^2`` edges of an ``L x L`` torus.

    Horizontal edge ``(r, c)`` joins vertices ``(r, c)`` and ``(r, c+1)`` and
    has index ``r L + c``; vertical edge ``(r, c)`` joins ``(r, c)`` and
    ``(r+1, c)`` and has index ``L^2 + r L + c``.
    """
    if L not in (2, 3):
        raise ValueError("toric_code supports L in {2, 3}")
    n = 2 * L * L

    def h(r, c):
        return (r % L) * L + (c % L)

    def v(r, c):
        return L * L + (r % L) * L + (c % L)

    def word(edges, letter):
        w = ["I"] * n
        for e in edges:
            w[e] = letter
        return "".join(w)

    stars = [word([h(r, c), h(r, c - 1), v(r, c), v(r - 1, c)], "X") for r in range(L) for c in range(L)]
    plaqs = [word([h(r, c), h(r + 1, c), v(r, c), v(r, c + 1)], "Z") for r in range(L) for c in range(L)]
    # the product of all stars (and of all plaquettes) is the identity; drop one of each
    gens = tuple(stars[:-1] + plaqs[:-1])
    lz = (word([h(0, c) for c in range(L)], "Z"), word([v(r, 0) for r in range(L)], "Z"))
    lx = (word([h(r, 0) for r in range(L)], "X"), word([v(0, c) for c in range(L)], "X"))
    code = StabilizerCode(f"toric_L{L}", n, gens, lx, lz)
    code.check()
    return code


def toric_all_checks(L):
    """Every star and plaquette, including the two dependent ones."""
    code = toric_code(L)
    n = code.n_physical
    stars = [g for g in code.generators if "X" in g]
    plaqs = [g for g in code.generators if "Z" in g]

    def product(words, letter):
        acc = np.zeros(n, dtype=np.uint8)
        for w in words:
            acc ^= np.array([c == letter for c in w], dtype=np.uint8)
        return "".join(letter if b else "I" for b in acc)

    return stars + [product(stars, "X")] + plaqs + [product(plaqs, "Z")]


# -- state operations --------------------------------------------------------

@dataclass
class CodeStateAnalysis:
    leakage: float
    syndrome_probs: np.ndarray
    logical_bloch: np.ndarray = field(default=None)

    @property
    def codespace_support(self):
        return self.logical_bloch is not None

    def parameters(self):
        """Leakage followed by the logical Bloch components."""
        return np.concatenate([[self.leakage], self.logical_bloch])

    def to_dict(self):
        return {
            "leakage": self.leakage,
            "syndrome_probs": self.syndrome_probs.tolist(),
            "logical_bloch": None if self.logical_bloch is None else self.logical_bloch.tolist(),
        }


def encode(code, logical_state):
    rho_l = np.asarray(logical_state, dtype=complex)
    if rho_l.shape != (2**code.k_logical,) * 2:
        raise DimensionError(f"{code.name} encodes {code.k_logical} qubit(s); got shape {rho_l.shape}")
    v = code.encoder
    return v @ rho_l @ v.conj().T


def logical_state(code, rho):
    """Code-projected, renormalized logical density matrix."""
    v = code.encoder
    rho_l = v.conj().T @ rho @ v
    w = np.real(np.trace(rho_l))
    if w < 1e-12:
        raise NoCodespaceSupport(f"state has weight {w:.3g} in the codespace of {code.name}")
    return rho_l / w


def analyze_code_state(code, rho, strict=False):
    """Leakage, syndrome distribution and logical Bloch parameters.

    With no codespace support the logical parameters are ``None``; pass
    ``strict=True`` to raise :class:`NoCodespaceSupport` instead.
    """
    rho = np.asarray(rho, dtype=complex)
    d = 2**code.n_physical
    if rho.shape != (d, d):
        raise DimensionError(f"{code.name} acts on {code.n_physical} qubits; got shape {rho.shape}")
    synd = np.real(np.tensordot(code._projector_stack, rho.T, axes=([1, 2], [0, 1])))
    inside = float(synd[0])
    try:
        rho_l = logical_state(code, rho)
    except NoCodespaceSupport:
        if strict:
            raise
        return CodeStateAnalysis(float(np.clip(1 - inside, 0, 1)), synd)
    k = code.k_logical
    bloch = []
    for j in range(k):
        red = qmath.partial_trace(rho_l, [j]) if k > 1 else rho_l
        bloch.extend(qmath.bloch_vector(red))
    return CodeStateAnalysis(float(np.clip(1 - inside, 0, 1)), synd, np.array(bloch))


def decode_correct(code, rho):
    """Projective syndrome measurement followed by the lookup recovery, as a channel."""
    w = code.syndrome_bases
    # sum_s W_s^dag rho W_s is the corrected logical state
    rho_l = np.einsum("sia,ij,sjb->ab", w.conj(), rho, w, optimize=True)
    v = code.encoder
    return v @ rho_l @ v.conj().T


def logical_fidelity(code, rho, target_logical):
    """``<psi_L| rho_L |psi_L>``-style overlap of the decoded logical state with a target."""
    return float(np.real(np.trace(logical_state(code, rho) @ target_logical)))


# -- codeword mixtures -------------------------------------------------------

@dataclass
class MixtureReport:
    mean: np.ndarray
    std: np.ndarray
    leakage_mean: float
    leakage_std: float
    runs: int

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "leakage_mean": self.leakage_mean,
            "leakage_std": self.leakage_std,
            "runs": self.runs,
        }

    @property
    def spread(self):
        """Root of the summed per-parameter variances of the logical Bloch components."""
        return float(np.sqrt(np.sum(self.std**2)))


def codeword_mixture_report(runs):
    if len(runs) < 2:
        raise ValueError("codeword_mixture_report needs at least two runs")
    bloch = np.array([r.logical_bloch for r in runs])
    leak = np.array([r.leakage for r in runs])
    return MixtureReport(bloch.mean(axis=0), bloch.std(axis=0), float(leak.mean()),
                         float(leak.std()), len(runs))


SHARP_SPREAD = 1e-12


def spread_ratio(arm_a, arm_b):
    """Logical-parameter spread of ``arm_a`` relative to ``arm_b``.

    Spreads at or below ``SHARP_SPREAD`` are roundoff and count as zero, so a
    sharp ``arm_b`` gives ``inf`` (or ``nan`` if both arms are sharp).
    """
    a, b = arm_a.spread, arm_b.spread
    a = 0.0 if a <= SHARP_SPREAD else a
    if b <= SHARP_SPREAD:
        return float("inf") if a > 0 else float("nan")
    return a / b
