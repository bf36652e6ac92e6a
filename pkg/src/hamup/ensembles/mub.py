"""Complete sets of mutually unbiased bases for small dimensions.

Odd prime ``p`` uses the quadratic-phase (Weyl-Heisenberg) construction; ``2^n``
with ``n <= 3`` uses commuting Pauli classes labelled by elements of GF(2^n).
Basis 0 is always the computational basis.
"""

from __future__ import annotations

import functools

import numpy as np

from ..errors import ConfigurationError
from .clifford import pauli_matrix

# irreducible polynomials over GF(2), bit k = coefficient of x^k
_IRREDUCIBLE = {1: 0b11, 2: 0b111, 3: 0b1011}


def _is_prime(m: int) -> bool:
    return m >= 2 and all(m % k for k in range(2, int(m**0.5) + 1))


def supported(dim: int) -> bool:
    return (dim > 2 and _is_prime(dim)) or dim in (2, 4, 8)


def _gf_mul(a: int, b: int, n: int) -> int:
    poly = _IRREDUCIBLE[n]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return out


def _gf_trace(a: int, n: int) -> int:
    """Absolute trace a + a^2 + ... + a^(2^(n-1)), which lies in GF(2)."""
    total, power = 0, a
    for _ in range(n):
        total ^= power
        power = _gf_mul(power, power, n)
    return total & 1


def _prime_bases(p: int) -> list[np.ndarray]:
    j = np.arange(p)
    omega = np.exp(2j * np.pi / p)
    bases = [np.eye(p, dtype=np.complex128)]
    for a in range(p):
        cols = [omega ** ((a * j * j + b * j) % p) / np.sqrt(p) for b in range(p)]
        bases.append(np.stack(cols, axis=1))
    return bases


def _common_eigenbasis(generators: list[np.ndarray]) -> np.ndarray:
    """Rank-one projectors prod_k (I + s_k P_k)/2 for every sign pattern s, as columns."""
    dim = generators[0].shape[0]
    n = len(generators)
    cols = []
    for signs in range(2**n):
        proj = np.eye(dim, dtype=np.complex128)
        for k, g in enumerate(generators):
            s = -1.0 if (signs >> (n - 1 - k)) & 1 else 1.0
            proj = proj @ (np.eye(dim) + s * g) / 2
        col = proj[:, int(np.argmax(np.linalg.norm(proj, axis=0)))]
        cols.append(col / np.linalg.norm(col))
    return np.stack(cols, axis=1)


def _qubit_bases(n: int) -> list[np.ndarray]:
    dim = 2**n
    bases = [np.eye(dim, dtype=np.complex128)]
    for a in range(dim):
        # symmetric binary matrix B_a[i][j] = tr(a e_i e_j) with e_i = x^i
        b = np.array([[_gf_trace(_gf_mul(a, _gf_mul(1 << i, 1 << j, n), n), n) for j in range(n)] for i in range(n)])
        gens = []
        for k in range(n):
            x = np.zeros(n, dtype=np.int64)
            x[k] = 1
            z = b @ x % 2
            gens.append(pauli_matrix(x, z))
        bases.append(_common_eigenbasis(gens))
    return bases


@functools.lru_cache(maxsize=None)
def _bases(dim: int) -> tuple[np.ndarray, ...]:
    if dim in (2, 4, 8):
        return tuple(_qubit_bases(dim.bit_length() - 1))
    if dim > 2 and _is_prime(dim):
        return tuple(_prime_bases(dim))
    raise ConfigurationError(f"no mutually unbiased basis table for D={dim}")


def mub_bases(dim: int) -> list[np.ndarray]:
    """All ``dim + 1`` bases; column ``i`` of entry ``k`` is basis vector ``i`` of basis ``k``."""
    return [b.copy() for b in _bases(dim)]
