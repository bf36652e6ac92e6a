"""Basis-rotation unitaries that can be applied without forming a dense matrix.

Gate sequences act on ``n`` qudits of dimension ``d`` with wire 0 the most
significant digit of the computational-basis index (``np.kron`` order).
Gates are stored in application order: the first gate acts first on the ket.

Text format, one gate per line::

    # qudits <n> <d>
    H 0
    CNOT 0 1
    U1 2 <re> <im> ...          (d*d entries, row major)
    U2 1 2 <re> <im> ...        (d**4 entries, row major)

Blank lines and lines starting with ``#`` other than the header are ignored.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError, ShapeError

_SQ2 = 1.0 / math.sqrt(2.0)
FIXED_GATES = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    "S": np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128),
}
_ADJOINT_NAME = {"H": "H", "S": "SDG", "SDG": "S", "X": "X", "Y": "Y", "Z": "Z", "CNOT": "CNOT"}
_ARITY = {"H": 1, "S": 1, "SDG": 1, "X": 1, "Y": 1, "Z": 1, "CNOT": 2, "U1": 1, "U2": 2}


class FastUnitary:
    """Common interface: ``dim``, ``label``, ``apply`` and ``to_dense``."""

    dim: int
    label: str

    def apply(self, v: np.ndarray, adjoint: bool = False) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        return self.apply(np.eye(self.dim, dtype=np.complex128))

    def basis_columns(self) -> np.ndarray:
        """Matrix whose column ``i`` is ``U^dag |i>``, i.e. the measured basis vectors."""
        return self.apply(np.eye(self.dim, dtype=np.complex128), adjoint=True)

    def _check(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if v.ndim not in (1, 2) or v.shape[0] != self.dim:
            raise ShapeError(f"expected leading dimension {self.dim}, got shape {v.shape}")
        return v


class DenseUnitary(FastUnitary):
    """A unitary stored as a dense matrix (Haar samples, MUB rotations)."""

    def __init__(self, matrix: np.ndarray, label: str = "dense"):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f"unitary must be square, got {matrix.shape}")
        self.matrix = matrix
        self.dim = matrix.shape[0]
        self.label = label
        self._adj = None

    def apply(self, v, adjoint=False):
        v = self._check(v)
        if adjoint:
            if self._adj is None:
                self._adj = np.ascontiguousarray(self.matrix.conj().T)
            return self._adj @ v
        return self.matrix @ v

    def to_dense(self):
        return self.matrix.copy()

    def basis_columns(self):
        return self.matrix.conj().T.copy()


class Gate:
    """A named 1- or 2-qudit gate acting on ``wires``."""

    __slots__ = ("name", "wires", "matrix")

    def __init__(self, name: str, wires, matrix: np.ndarray | None = None):
        if name not in _ARITY:
            raise ConfigurationError(f"unknown gate {name!r}")
        wires = tuple(int(w) for w in wires)
        if len(wires) != _ARITY[name]:
            raise ConfigurationError(f"gate {name} takes {_ARITY[name]} wire(s), got {len(wires)}")
        if len(set(wires)) != len(wires):
            raise ConfigurationError(f"gate {name} has repeated wires {wires}")
        if matrix is None:
            if name not in FIXED_GATES:
                raise ConfigurationError(f"gate {name} needs an explicit matrix")
            matrix = FIXED_GATES[name]
        self.name = name
        self.wires = wires
        self.matrix = np.asarray(matrix, dtype=np.complex128)

    def adjoint(self) -> "Gate":
        if self.name in _ADJOINT_NAME:
            return Gate(_ADJOINT_NAME[self.name], self.wires)
        return Gate(self.name, self.wires, self.matrix.conj().T)

    def __repr__(self):
        return f"Gate({self.name!r}, {self.wires})"


class GateSequence(FastUnitary):
    """Product of local gates applied by streaming over the amplitude tensor."""

    def __init__(self, n_qudits: int, gates=(), qudit_dim: int = 2, label: str = "circuit"):
        if n_qudits < 1 or qudit_dim < 2:
            raise ConfigurationError(f"need n >= 1 qudits of dimension >= 2, got n={n_qudits}, d={qudit_dim}")
        self.n = n_qudits
        self.d = qudit_dim
        self.dim = qudit_dim**n_qudits
        self.label = label
        self.gates = list(gates)
        for g in self.gates:
            if max(g.wires) >= n_qudits or min(g.wires) < 0:
                raise ConfigurationError(f"gate {g} outside wires 0..{n_qudits - 1}")
            if g.matrix.shape != (self.d ** len(g.wires),) * 2:
                raise ConfigurationError(f"gate {g} has matrix shape {g.matrix.shape} for d={self.d}")

    def __len__(self):
        return len(self.gates)

    def adjoint(self) -> "GateSequence":
        return GateSequence(self.n, [g.adjoint() for g in reversed(self.gates)], self.d, self.label + "^dag")

    def apply(self, v, adjoint=False):
        v = self._check(v)
        vector = v.ndim == 1
        k = 1 if vector else v.shape[1]
        t = v.reshape((self.d,) * self.n + (k,)).copy()
        gates = reversed(self.gates) if adjoint else self.gates
        for g in gates:
            t = self._apply_gate(t, g, adjoint)
        return t.reshape(self.dim) if vector else t.reshape(self.dim, k)

    def _apply_gate(self, t, g: Gate, adjoint: bool):
        name = g.name
        if adjoint:
            g = g.adjoint()
            name = g.name
        if self.d == 2 and name in ("S", "SDG", "Z", "X", "CNOT", "H"):
            return _apply_qubit_fast(t, name, g.wires)
        if len(g.wires) == 1:
            (w,) = g.wires
            t = np.tensordot(g.matrix, t, axes=([1], [w]))
            return np.moveaxis(t, 0, w)
        w1, w2 = g.wires
        m = g.matrix.reshape(self.d, self.d, self.d, self.d)
        t = np.tensordot(m, t, axes=([2, 3], [w1, w2]))
        return np.moveaxis(t, [0, 1], [w1, w2])

    def to_text(self) -> str:
        lines = [f"# qudits {self.n} {self.d}"]
        for g in self.gates:
            parts = [g.name] + [str(w) for w in g.wires]
            if g.name in ("U1", "U2"):
                for z in g.matrix.ravel():
                    parts += [repr(float(z.real)), repr(float(z.imag))]
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_qudits: int | None = None, qudit_dim: int | None = None) -> "GateSequence":
        gates = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = line[1:].split()
                if len(fields) == 3 and fields[0] == "qudits":
                    n_qudits = n_qudits or int(fields[1])
                    qudit_dim = qudit_dim or int(fields[2])
                continue
            fields = line.split()
            name = fields[0]
            if name not in _ARITY:
                raise ConfigurationError(f"line {lineno}: unknown gate {name!r}")
            arity = _ARITY[name]
            try:
                wires = [int(w) for w in fields[1 : 1 + arity]]
                values = [float(x) for x in fields[1 + arity :]]
            except ValueError as exc:
                raise ConfigurationError(f"line {lineno}: {exc}") from None
            if len(wires) != arity:
                raise ConfigurationError(f"line {lineno}: gate {name} needs {arity} wire(s)")
            matrix = None
            if name in ("U1", "U2"):
                if len(values) % 2:
                    raise ConfigurationError(f"line {lineno}: odd number of matrix floats")
                entries = np.array(values[0::2]) + 1j * np.array(values[1::2])
                side = math.isqrt(entries.size)
                if side * side != entries.size:
                    raise ConfigurationError(f"line {lineno}: matrix entries do not form a square")
                matrix = entries.reshape(side, side)
            elif values:
                raise ConfigurationError(f"line {lineno}: gate {name} takes no parameters")
            gates.append(Gate(name, wires, matrix))
        if n_qudits is None:
            n_qudits = 1 + max((max(g.wires) for g in gates), default=0)
        return cls(n_qudits, gates, qudit_dim or 2)


def _apply_qubit_fast(t: np.ndarray, name: str, wires) -> np.ndarray:
    """In-place style updates for the common qubit gates (no tensordot)."""
    ndim = t.ndim

    def idx(w, b):
        sl = [slice(None)] * ndim
        sl[w] = b
        return tuple(sl)

    if name in ("S", "SDG", "Z"):
        w = wires[0]
        t[idx(w, 1)] *= {"S": 1j, "SDG": -1j, "Z": -1.0}[name]
        return t
    if name == "X":
        w = wires[0]
        t[idx(w, 0)], t[idx(w, 1)] = t[idx(w, 1)].copy(), t[idx(w, 0)].copy()
        return t
    if name == "H":
        w = wires[0]
        a = t[idx(w, 0)].copy()
        b = t[idx(w, 1)]
        t[idx(w, 0)] = (a + b) * _SQ2
        t[idx(w, 1)] = (a - b) * _SQ2
        return t
    c, tg = wires
    sl0 = [slice(None)] * ndim
    sl1 = [slice(None)] * ndim
    sl0[c] = sl1[c] = 1
    sl0[tg] = 0
    sl1[tg] = 1
    sl0, sl1 = tuple(sl0), tuple(sl1)
    tmp = t[sl0].copy()
    t[sl0] = t[sl1]
    t[sl1] = tmp
    return t


def embed_gate(gate: Gate, n_qudits: int, qudit_dim: int = 2) -> np.ndarray:
    """Dense ``D x D`` matrix of a single gate (oracle for the streaming path)."""
    dim = qudit_dim**n_qudits
    out = np.zeros((dim, dim), dtype=np.complex128)
    # build column by column from tensor products, independent of apply()
    d = qudit_dim
    for col in range(dim):
        digits = list(np.unravel_index(col, (d,) * n_qudits))
        sub_in = np.ravel_multi_index([digits[w] for w in gate.wires], (d,) * len(gate.wires))
        for sub_out in range(d ** len(gate.wires)):
            amp = gate.matrix[sub_out, sub_in]
            if amp == 0:
                continue
            out_digits = list(digits)
            for w, val in zip(gate.wires, np.unravel_index(sub_out, (d,) * len(gate.wires))):
                out_digits[w] = int(val)
            out[np.ravel_multi_index(out_digits, (d,) * n_qudits), col] += amp
    return out


def dense_expansion(seq: GateSequence) -> np.ndarray:
    """Multiply embedded gate matrices; independent of the streaming apply."""
    out = np.eye(seq.dim, dtype=np.complex128)
    for g in seq.gates:
        out = embed_gate(g, seq.n, seq.d) @ out
    return out
