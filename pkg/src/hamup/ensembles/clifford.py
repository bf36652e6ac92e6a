"""Stabilizer tableaux: uniform sampling, gate synthesis and Pauli conjugation.

A tableau of an ``n``-qubit Clifford ``C`` stores the images ``C X_j C^dag``
(rows ``0..n-1``) and ``C Z_j C^dag`` (rows ``n..2n-1``) as signed Pauli
strings.  Columns ``0..n-1`` hold x bits, ``n..2n-1`` z bits, and ``phase``
holds the sign bit of every row.  A bit pair ``(x, z) = (1, 1)`` denotes the
Hermitian ``Y``.  In block form ``alpha, beta`` are the x/z bits of the X-images
and ``gamma, delta`` the x/z bits of the Z-images; ``p``/``s`` are their signs.
"""

from __future__ import annotations

import numpy as np

from .._rng import as_generator
from ..errors import ConfigurationError
from .unitaries import Gate, GateSequence

_PAULI = {
    (0, 0): np.eye(2, dtype=np.complex128),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=np.complex128),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=np.complex128),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
}


def pauli_matrix(x, z, sign: int = 0) -> np.ndarray:
    """Dense ``(-1)^sign * P(x_0, z_0) (x) ... (x) P(x_{n-1}, z_{n-1})``."""
    out = np.ones((1, 1), dtype=np.complex128)
    for xb, zb in zip(x, z):
        out = np.kron(out, _PAULI[(int(xb), int(zb))])
    return -out if sign else out


def _g(x1, z1, x2, z2):
    """Exponent of ``i`` picked up when multiplying single-qubit Paulis (vectorized)."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return np.where(
        (x1 == 0) & (z1 == 0),
        0,
        np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2)),
        ),
    )


class CliffordTableau:
    def __init__(self, n_qubits: int, table: np.ndarray | None = None, phase: np.ndarray | None = None, validate: bool = True):
        if n_qubits < 1:
            raise ConfigurationError(f"need at least one qubit, got {n_qubits}")
        self.n = n_qubits
        if table is None:
            table = np.eye(2 * n_qubits, dtype=np.uint8)
        if phase is None:
            phase = np.zeros(2 * n_qubits, dtype=np.uint8)
        self.table = np.asarray(table, dtype=np.uint8) % 2
        self.phase = np.asarray(phase, dtype=np.uint8) % 2
        if self.table.shape != (2 * n_qubits, 2 * n_qubits) or self.phase.shape != (2 * n_qubits,):
            raise ConfigurationError(f"malformed tableau shapes {self.table.shape}, {self.phase.shape}")
        if validate and not self.is_symplectic():
            raise ConfigurationError("tableau violates the symplectic condition")

    @property
    def alpha(self):
        return self.table[: self.n, : self.n]

    @property
    def beta(self):
        return self.table[: self.n, self.n :]

    @property
    def gamma(self):
        return self.table[self.n :, : self.n]

    @property
    def delta(self):
        return self.table[self.n :, self.n :]

    @property
    def p(self):
        return self.phase[: self.n]

    @property
    def s(self):
        return self.phase[self.n :]

    def copy(self) -> "CliffordTableau":
        return CliffordTableau(self.n, self.table.copy(), self.phase.copy(), validate=False)

    def is_symplectic(self) -> bool:
        n = self.n
        lam = np.zeros((2 * n, 2 * n), dtype=np.int64)
        lam[:n, n:] = np.eye(n, dtype=np.int64)
        lam[n:, :n] = np.eye(n, dtype=np.int64)
        m = self.table.astype(np.int64)
        return bool(np.array_equal((m @ lam @ m.T) % 2, lam))

    def row(self, k: int):
        """Signed Pauli ``(x, z, sign)`` of tableau row ``k``."""
        return self.table[k, : self.n].copy(), self.table[k, self.n :].copy(), int(self.phase[k])

    # gate updates: the tableau of G C from that of C
    def h(self, a: int):
        x, z = self.table[:, a].copy(), self.table[:, self.n + a].copy()
        self.phase ^= x & z
        self.table[:, a], self.table[:, self.n + a] = z, x
        return self

    def s_gate(self, a: int):
        x = self.table[:, a]
        self.phase ^= x & self.table[:, self.n + a]
        self.table[:, self.n + a] ^= x
        return self

    def cnot(self, c: int, t: int):
        n = self.n
        xc, zc = self.table[:, c], self.table[:, n + c]
        xt, zt = self.table[:, t], self.table[:, n + t]
        self.phase ^= xc & zt & (xt ^ zc ^ 1)
        self.table[:, t] ^= xc
        self.table[:, n + c] ^= zt
        return self

    def apply_gate(self, name: str, wires):
        if name == "H":
            return self.h(wires[0])
        if name == "S":
            return self.s_gate(wires[0])
        if name == "SDG":
            return self.s_gate(wires[0]).s_gate(wires[0]).s_gate(wires[0])
        if name == "Z":
            return self.s_gate(wires[0]).s_gate(wires[0])
        if name == "X":
            return self.h(wires[0]).s_gate(wires[0]).s_gate(wires[0]).h(wires[0])
        if name == "CNOT":
            return self.cnot(*wires)
        raise ConfigurationError(f"gate {name} is not a Clifford generator")

    @classmethod
    def from_gates(cls, n_qubits: int, gates) -> "CliffordTableau":
        tab = cls(n_qubits)
        for g in gates:
            tab.apply_gate(g.name, g.wires)
        return tab

    def conjugate(self, x, z, sign: int = 0):
        """Image ``C P C^dag`` of the signed Pauli ``P = (x, z, sign)``."""
        n = self.n
        x = np.asarray(x, dtype=np.uint8)
        z = np.asarray(z, dtype=np.uint8)
        # P = (-1)^sign i^{x.z} prod_j X_j^{x_j} prod_j Z_j^{z_j}; multiply the row images
        acc_x = np.zeros(n, dtype=np.uint8)
        acc_z = np.zeros(n, dtype=np.uint8)
        power = 2 * int(sign) + int(np.sum(x & z))
        for k in [j for j in range(n) if x[j]] + [n + j for j in range(n) if z[j]]:
            rx, rz, rs = self.row(k)
            power += 2 * rs + int(_g(acc_x, acc_z, rx, rz).sum())
            acc_x ^= rx
            acc_z ^= rz
        power %= 4
        if power % 2:
            raise ConfigurationError("non-Hermitian image; tableau is malformed")
        return acc_x, acc_z, power // 2

    def to_dense(self) -> np.ndarray:
        """Dense unitary (up to global phase) via the synthesized gate sequence."""
        return tableau_to_gates(self).to_dense()


def random_clifford(n_qubits: int, seed=None) -> CliffordTableau:
    """Uniformly random Clifford tableau via the canonical Hadamard-permutation form.

    The symplectic part is ``F1 (H perm) F2`` with ``F1, F2`` random Borel
    elements and the Hadamard/permutation layer drawn from the quantum Mallows
    distribution; sign bits are uniform.  Cost is ``O(n^3)``.
    """
    if n_qubits < 1:
        raise ConfigurationError(f"need at least one qubit, got {n_qubits}")
    rng = as_generator(seed)
    n = n_qubits
    had, perm = _sample_qmallows(n, rng)
    gamma1 = np.diag(rng.integers(2, size=n)).astype(np.int64)
    gamma2 = np.diag(rng.integers(2, size=n)).astype(np.int64)
    delta1 = np.eye(n, dtype=np.int64)
    delta2 = np.eye(n, dtype=np.int64)
    _fill_tril(gamma1, rng, symmetric=True)
    _fill_tril(gamma2, rng, symmetric=True)
    _fill_tril(delta1, rng)
    _fill_tril(delta2, rng)
    zero = np.zeros((n, n), dtype=np.int64)
    table1 = np.block([[delta1, zero], [(gamma1 @ delta1) % 2, _gf2_inv(delta1).T]])
    table2 = np.block([[delta2, zero], [(gamma2 @ delta2) % 2, _gf2_inv(delta2).T]])
    table = table2[np.concatenate([perm, n + perm])]
    inds = np.flatnonzero(had)
    lhs = np.concatenate([inds, inds + n])
    rhs = np.concatenate([inds + n, inds])
    table[lhs, :] = table[rhs, :]
    full = (table1 @ table) % 2
    phase = rng.integers(2, size=2 * n)
    return CliffordTableau(n, full, phase)


def _sample_qmallows(n: int, rng):
    had = np.zeros(n, dtype=bool)
    perm = np.zeros(n, dtype=np.int64)
    inds = list(range(n))
    for i in range(n):
        m = n - i
        eps = 4.0 ** (-m)
        r = rng.uniform(0, 1)
        index = -int(np.ceil(np.log2(r + (1 - r) * eps)))
        had[i] = index < m
        k = index if index < m else 2 * m - index - 1
        perm[i] = inds.pop(k)
    return had, perm


def _fill_tril(mat, rng, symmetric=False):
    rows, cols = np.tril_indices(mat.shape[0], -1)
    vals = rng.integers(2, size=rows.size)
    mat[rows, cols] = vals
    if symmetric:
        mat[cols, rows] = vals


def _gf2_inv(mat: np.ndarray) -> np.ndarray:
    """Inverse of an invertible binary matrix over GF(2) by Gauss-Jordan elimination."""
    n = mat.shape[0]
    aug = np.concatenate([mat % 2, np.eye(n, dtype=np.int64)], axis=1).astype(np.uint8)
    for col in range(n):
        pivot = col + int(np.argmax(aug[col:, col]))
        if not aug[pivot, col]:
            raise ConfigurationError("matrix is singular over GF(2)")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        mask = aug[:, col].astype(bool)
        mask[col] = False
        aug[mask] ^= aug[col]
    return aug[:, n:].astype(np.int64)


def tableau_to_gates(tableau: CliffordTableau) -> GateSequence:
    """Synthesize an ``O(n^2)`` H/S/CNOT circuit implementing the tableau.

    The tableau is reduced to the identity qubit by qubit by appending gates;
    the implementing circuit is the reversed list of their inverses.  The
    result matches the tableau up to a global phase.
    """
    if not tableau.is_symplectic():
        raise ConfigurationError("tableau violates the symplectic condition")
    n = tableau.n
    work = tableau.copy()
    applied: list[tuple[str, tuple[int, ...]]] = []

    def do(name, *wires):
        work.apply_gate(name, wires)
        applied.append((name, wires))

    t = work.table
    for i in range(n):
        # X-image of qubit i -> X_i
        if not t[i, i:n].any():
            k = i + int(np.flatnonzero(t[i, n + i :])[0])
            do("H", k)
        if not t[i, i]:
            k = i + int(np.flatnonzero(t[i, i:n])[0])
            do("CNOT", k, i)
        for j in range(i + 1, n):
            if t[i, j]:
                do("CNOT", i, j)
        for j in range(i + 1, n):
            if t[i, n + j]:
                do("H", j)
                do("CNOT", i, j)
        if t[i, n + i]:
            do("S", i)
        # Z-image of qubit i -> Z_i, keeping X_i fixed
        r = n + i
        for j in range(i + 1, n):
            if t[r, j]:
                if t[r, n + j]:
                    do("S", j)
                do("H", j)
        for j in range(i + 1, n):
            if t[r, n + j]:
                do("CNOT", j, i)
        if t[r, i]:
            do("H", i)
            do("S", i)
            do("H", i)
    for i in range(n):
        if work.phase[i]:
            do("Z", i)
        if work.phase[n + i]:
            do("X", i)
    if not (np.array_equal(work.table, np.eye(2 * n, dtype=np.uint8)) and not work.phase.any()):
        raise ConfigurationError("tableau synthesis did not reach the identity")
    gates: list[Gate] = []
    for name, wires in reversed(applied):
        gates.extend(_inverse_as_generators(name, wires))
    return GateSequence(n, gates, 2, label="clifford")


def _inverse_as_generators(name, wires):
    """Inverse of a gate written with H, S and CNOT only."""
    if name in ("H", "CNOT"):
        return [Gate(name, wires)]
    (a,) = wires
    if name == "S":
        return [Gate("S", (a,))] * 3
    if name == "Z":
        return [Gate("S", (a,))] * 2
    if name == "X":
        return [Gate("H", (a,)), Gate("S", (a,)), Gate("S", (a,)), Gate("H", (a,))]
    raise ConfigurationError(f"unexpected gate {name}")
