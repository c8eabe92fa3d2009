"""
Dense linear algebra and state primitives for small qubit registers.

States and operators are plain complex numpy arrays of shape (2**n, 2**n).
Qubit 0 is the most significant bit of a basis index, so ``|01>`` is index 1.
Pauli words are strings over ``"IXYZ"``; letter ``k`` acts on qubit ``k``.
"""

from functools import reduce

import numpy as np

ATOL = 1e-10
PSD_TOL = 1e-8
ENTROPY_CUTOFF = 1e-12
MAX_STATE_QUBITS = 12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

PAULI_LETTERS = "IXYZ"
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
_PAULI_STACK = np.stack([I2, X, Y, Z])


class DimensionError(ValueError):
    pass


def n_qubits_of(a):
    d = a.shape[0]
    n = int(round(np.log2(d))) if d > 0 else -1
    if a.ndim != 2 or a.shape[0] != a.shape[1] or n < 0 or 2**n != d:
        raise DimensionError(f"expected a 2^n x 2^n matrix, got shape {a.shape}")
    return n


# -- validation --------------------------------------------------------------

def is_hermitian(a, atol=ATOL):
    return np.max(np.abs(a - a.conj().T), initial=0.0) <= atol


def is_unitary(u, atol=ATOL):
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol


def is_density_matrix(rho, atol=ATOL, psd_tol=PSD_TOL):
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if not is_hermitian(rho, atol) or abs(np.trace(rho) - 1) > atol:
        return False
    return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] >= -psd_tol


def check_density_matrix(rho, atol=ATOL):
    rho = np.asarray(rho, dtype=complex)
    n_qubits_of(rho)
    if not is_density_matrix(rho, atol):
        raise ValueError("not a valid density matrix (Hermitian, unit trace, PSD)")
    return rho


def _kind(a):
    if a.shape[0] == 1:
        return "scalar"
    if is_density_matrix(a):
        return "state"
    if is_unitary(a):
        return "unitary"
    raise ValueError("operand is neither a density matrix nor a unitary")


# -- construction ------------------------------------------------------------

def ket(bits):
    """Computational basis vector for a bitstring such as ``"010"``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2) if bits else 0] = 1.0
    return v


def pure(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def maximally_mixed(n):
    return np.eye(2**n, dtype=complex) / 2**n


def bell_state():
    return pure(np.array([1, 0, 0, 1]))


def werner_state(p):
    """``p |Psi-><Psi-| + (1 - p) I/4``; separable iff ``p <= 1/3``."""
    singlet = pure(np.array([0, 1, -1, 0]))
    return p * singlet + (1 - p) * maximally_mixed(2)


def ghz_state(n):
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1
    return pure(psi)


def kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def tensor_product(a, b):
    """Kronecker product of two states or two unitaries; mixing kinds is an error."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n_qubits_of(a)
    n_qubits_of(b)
    ka, kb = _kind(a), _kind(b)
    if "scalar" not in (ka, kb) and ka != kb:
        raise TypeError(f"cannot take tensor product of a {ka} with a {kb}")
    return np.kron(a, b)


def pauli_word_weight(word):
    return sum(c != "I" for c in word)


def pauli_matrix(word):
    if any(c not in PAULIS for c in word):
        raise ValueError(f"malformed Pauli word {word!r}")
    return kron_all([PAULIS[c] for c in word])


def pauli_action(word):
    """``(perm, phase)`` with ``P_w |j> = phase[j] |perm[j]>``."""
    n = len(word)
    idx = np.arange(2**n)
    perm = idx.copy()
    phase = np.ones(2**n, dtype=complex)
    for k, c in enumerate(word):
        bit = (idx >> (n - 1 - k)) & 1
        if c in "XY":
            perm ^= 1 << (n - 1 - k)
        if c == "Z":
            phase *= 1 - 2 * bit
        elif c == "Y":
            phase *= 1j * (1 - 2 * bit)
        elif c not in "IX":
            raise ValueError(f"malformed Pauli word {word!r}")
    return perm, phase


def apply_pauli(word, m):
    """``P_w @ m`` in ``O(d^2)`` (rows permuted and rephased)."""
    perm, phase = pauli_action(word)
    out = np.empty_like(m, dtype=complex)
    out[perm] = phase.reshape((-1,) + (1,) * (m.ndim - 1)) * m
    return out


def word_from_index(index, n):
    digits = []
    for _ in range(n):
        index, r = divmod(index, 4)
        digits.append(PAULI_LETTERS[r])
    return "".join(reversed(digits))


def index_from_word(word):
    idx = 0
    for c in word:
        idx = 4 * idx + PAULI_LETTERS.index(c)
    return idx


def word_weights(n):
    """``|w|`` for every word index ``0 .. 4**n - 1``."""
    w = np.zeros(1, dtype=int)
    for _ in range(n):
        w = (w[:, None] + np.array([0, 1, 1, 1])[None, :]).ravel()
    return w


def embed(op, qubit, n):
    """Single-qubit operator ``op`` acting on ``qubit`` of an ``n``-qubit register."""
    return kron_all([op if k == qubit else I2 for k in range(n)])


def rotation(axis_op, angle):
    """``exp(-i angle/2 axis_op)`` for a Pauli ``axis_op``."""
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * axis_op


# -- Pauli transform ---------------------------------------------------------

# row w, column 2a+b holds P_w[b, a], so contracting gives tr(P_w A)
_TRACE_TRANSFORM = np.transpose(_PAULI_STACK, (0, 2, 1)).reshape(4, 4)


def pauli_coefficients(a):
    """Return ``tr(P_w a)`` for all ``4**n`` Pauli words, word index order.

    Runs in ``O(n 4^n)`` by contracting one qubit at a time instead of
    forming every Pauli matrix.
    """
    a = np.asarray(a, dtype=complex)
    n = n_qubits_of(a)
    t = a.reshape((2,) * (2 * n))
    # interleave (a_k, b_k) so each qubit owns one axis of length 4
    order = [ax for k in range(n) for ax in (k, n + k)]
    t = np.transpose(t, order).reshape((4,) * n) if n else t.reshape(())
    for k in range(n):
        t = np.tensordot(_TRACE_TRANSFORM, t, axes=([1], [k]))
        t = np.moveaxis(t, 0, k)
    return t.reshape(-1)


# -- reductions and measures -------------------------------------------------

def partial_trace(rho, keep):
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"qubit index out of range for {n} qubits: {keep}")
    traced = [k for k in range(n) if k not in keep]
    t = rho.reshape((2,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for k in traced:
        cols[k] = rows[k]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = 2 ** len(keep)
    return red.reshape(d, d)


def _clamped_eigvalsh(a):
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    w[(w < 0) & (w >= -PSD_TOL)] = 0.0
    return w


def trace_distance(rho, sigma):
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    diff = rho - sigma
    w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(min(1.0, 0.5 * np.sum(np.abs(w))))


def von_neumann_entropy(rho):
    """Entropy in bits; eigenvalues below 1e-12 contribute nothing."""
    w = _clamped_eigvalsh(np.asarray(rho, dtype=complex))
    w = w[w > ENTROPY_CUTOFF]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def purity(rho):
    return float(np.real(np.trace(rho @ rho)))


def partial_transpose(rho, qubits):
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho)
    t = rho.reshape((2,) * (2 * n))
    axes = list(range(2 * n))
    for k in qubits:
        axes[k], axes[n + k] = axes[n + k], axes[k]
    return np.transpose(t, axes).reshape(rho.shape)


def negativity(rho, cut):
    """Sum of |negative eigenvalues| of the partial transpose over ``cut``."""
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho)
    cut = set(cut)
    if not cut or len(cut) >= n or min(cut) < 0 or max(cut) >= n:
        raise ValueError(f"cut {sorted(cut)} is not a nontrivial bipartition of {n} qubits")
    w = _clamped_eigvalsh(partial_transpose(rho, cut))
    return float(max(0.0, -np.sum(w[w < 0])))


def expectation(rho, op):
    return float(np.real(np.trace(rho @ op)))


def bloch_vector(rho):
    return np.array([expectation(rho, X), expectation(rho, Y), expectation(rho, Z)])


# -- random sampling ---------------------------------------------------------

def haar_unitary(d, rng):
    """Haar-distributed ``d x d`` unitary from the QR decomposition of a Ginibre matrix."""
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density_matrix(n, rng, rank=None):
    d = 2**n
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_pure_state(n, rng):
    psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return pure(psi)


def random_hermitian(d, rng, scale=1.0):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (g + g.conj().T)
