"""Signed n-qubit Pauli operators in binary-symplectic form.

Qubits are indexed from 0. Bit ``l`` of the ``x``/``z`` integers refers to
qubit ``l``. Dense matrices use the Kronecker convention, so qubit 0 is the
most significant bit of a computational-basis index.

An operator is stored as ``i**phase * (P_0 ⊗ P_1 ⊗ ... ⊗ P_{n-1})`` where every
``P_l`` is one of the Hermitian matrices I, X, Y, Z. Phases ±i only appear
transiently (e.g. the product of two anticommuting operators); anything that
stands for a stabilizer or a measured observable must carry a real sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_LETTERS = "IXZY"  # indexed by x_bit + 2 * z_bit
_SIGN_PREFIX = {"": 0, "+": 0, "-": 2, "−": 2, "i": 1, "+i": 1, "-i": 3, "−i": 3}
_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}


class PauliError(ValueError):
    """Raised for malformed Paulis, size mismatches and incompatible settings."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _check_same_n(p: PauliOperator, q: PauliOperator) -> None:
    if p.n != q.n:
        raise PauliError(f"dimension mismatch: {p.n} vs {q.n} qubits")


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise PauliError("qubit count must be non-negative")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise PauliError("bit vectors exceed the qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- construction -----------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> PauliOperator:
        return cls(n)

    @classmethod
    def from_label(cls, text: str) -> PauliOperator:
        """Parse ``"-XZZXI"`` style text; the sign prefix is optional."""
        text = text.strip()
        body = text.lstrip("+-−i")
        prefix = text[: len(text) - len(body)]
        if prefix not in _SIGN_PREFIX:
            raise PauliError(f"bad sign prefix {prefix!r} in {text!r}")
        x = z = 0
        for l, ch in enumerate(body.upper()):
            if ch not in _LETTERS:
                raise PauliError(f"bad Pauli letter {ch!r} in {text!r}")
            code = _LETTERS.index(ch)
            x |= (code & 1) << l
            z |= (code >> 1) << l
        return cls(len(body), x, z, _SIGN_PREFIX[prefix])

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> PauliOperator:
        code = _LETTERS.index(letter.upper())
        return cls(n, (code & 1) << qubit, (code >> 1) << qubit)

    @classmethod
    def from_letters(cls, letters: dict[int, str], n: int, sign: int = 1) -> PauliOperator:
        x = z = 0
        for q, ch in letters.items():
            code = _LETTERS.index(ch.upper())
            x |= (code & 1) << q
            z |= (code >> 1) << q
        return cls(n, x, z, 0 if sign > 0 else 2)

    # -- basic views ----------------------------------------------------------

    @property
    def support(self) -> tuple[int, ...]:
        s = self.x | self.z
        return tuple(l for l in range(self.n) if (s >> l) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        if not self.is_hermitian:
            raise PauliError(f"{self} has an imaginary phase")
        return 1 if self.phase == 0 else -1

    def letter(self, qubit: int) -> str:
        return _LETTERS[((self.x >> qubit) & 1) + 2 * ((self.z >> qubit) & 1)]

    @property
    def letters(self) -> str:
        return "".join(self.letter(l) for l in range(self.n))

    @property
    def symplectic(self) -> int:
        """The 2n-bit vector ``x | z << n`` (phase dropped)."""
        return self.x | (self.z << self.n)

    def unsigned(self) -> PauliOperator:
        return PauliOperator(self.n, self.x, self.z, 0)

    def __neg__(self) -> PauliOperator:
        return PauliOperator(self.n, self.x, self.z, self.phase + 2)

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase] + self.letters

    def __repr__(self) -> str:
        return f"PauliOperator({str(self)!r})"

    # -- algebra ------------------------------------------------------------

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        return multiply(self, other)

    def commutes(self, other: PauliOperator) -> bool:
        return commutes(self, other)

    # -- dense views ----------------------------------------------------------

    def _index_masks(self) -> tuple[int, int]:
        xi = zi = 0
        for l in range(self.n):
            shift = self.n - 1 - l
            xi |= ((self.x >> l) & 1) << shift
            zi |= ((self.z >> l) & 1) << shift
        return xi, zi

    def _column_phases(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (rows, values) with ``P|b> = values[b] |rows[b]>``."""
        xi, zi = self._index_masks()
        b = np.arange(1 << self.n, dtype=np.int64)
        parity = np.bitwise_count(b & zi) & 1
        q = (self.phase + _popcount(self.x & self.z)) % 4
        values = (1j**q) * (1 - 2 * parity.astype(np.float64))
        return b ^ xi, values

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n
        rows, values = self._column_phases()
        out = np.zeros((dim, dim), dtype=complex)
        out[rows, np.arange(dim)] = values
        return out

    def expectation(self, rho: np.ndarray) -> complex:
        """``Tr(P rho)`` in O(2^n) time."""
        rows, values = self._column_phases()
        cols = np.arange(1 << self.n)
        return complex(np.sum(values * rho[cols, rows]))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        rows, values = self._column_phases()
        out = np.empty_like(psi, dtype=complex)
        out[rows] = values * psi
        return out


def multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    """Matrix product ``p @ q`` with the exact phase."""
    _check_same_n(p, q)
    # convert the Y-letter phases to the X^x Z^z normal form, multiply, convert back
    qp = p.phase + _popcount(p.x & p.z)
    qq = q.phase + _popcount(q.x & q.z)
    total = qp + qq + 2 * _popcount(p.z & q.x)
    x, z = p.x ^ q.x, p.z ^ q.z
    return PauliOperator(p.n, x, z, total - _popcount(x & z))


def product(ops: Iterable[PauliOperator], n: int) -> PauliOperator:
    out = PauliOperator.identity(n)
    for op in ops:
        out = multiply(out, op)
    return out


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    _check_same_n(p, q)
    return (_popcount(p.x & q.z) + _popcount(p.z & q.x)) % 2 == 0


def _bitwise_conflicts(p: PauliOperator, q: PauliOperator) -> int:
    overlap = (p.x | p.z) & (q.x | q.z)
    differ = (p.x ^ q.x) | (p.z ^ q.z)
    return overlap & differ


def bitwise_commutes(p: PauliOperator, q: PauliOperator) -> bool:
    """True iff the single-qubit reduced operators commute on every qubit."""
    _check_same_n(p, q)
    return _bitwise_conflicts(p, q) == 0


def symplectic_rank(ops: Sequence[PauliOperator]) -> int:
    """GF(2) rank of the symplectic vectors of ``ops``."""
    pivots: dict[int, int] = {}
    for op in ops:
        v = op.symplectic
        while v:
            top = v.bit_length() - 1
            if top not in pivots:
                pivots[top] = v
                break
            v ^= pivots[top]
    return len(pivots)


@dataclass(frozen=True)
class MeasurementSetting:
    """A product-basis measurement ``basis`` and the Paulis it resolves."""

    basis: str
    members: tuple[PauliOperator, ...] = ()

    @property
    def n(self) -> int:
        return len(self.basis)

    def compatible(self, target: PauliOperator) -> bool:
        return all(
            target.letter(l) in ("I", self.basis[l]) for l in range(self.n)
        )

    def as_pauli(self) -> PauliOperator:
        return PauliOperator.from_label(self.basis)


def merge_setting(members: Sequence[PauliOperator]) -> MeasurementSetting:
    """Combine pairwise bit-wise commuting Paulis into one local setting."""
    members = tuple(members)
    if not members:
        raise PauliError("cannot merge an empty member list")
    n = members[0].n
    for i, p in enumerate(members):
        _check_same_n(members[0], p)
        for j in range(i + 1, len(members)):
            bad = _bitwise_conflicts(p, members[j])
            if bad:
                qubit = (bad & -bad).bit_length() - 1
                raise PauliError(
                    f"members {i} ({p}) and {j} ({members[j]}) do not bit-wise "
                    f"commute on qubit {qubit}"
                )
    basis = []
    for l in range(n):
        letter = "I"
        for p in members:
            if p.letter(l) != "I":
                letter = p.letter(l)
                break
        basis.append(letter)
    return MeasurementSetting("".join(basis), members)


def evaluate_from_outcomes(
    setting: MeasurementSetting, outcomes: Sequence[int], target: PauliOperator
) -> int:
    """Eigenvalue of ``target`` implied by single-qubit ±1 outcomes of ``setting``."""
    if len(outcomes) != setting.n:
        raise PauliError(f"expected {setting.n} outcomes, got {len(outcomes)}")
    if target.n != setting.n or not setting.compatible(target):
        raise PauliError(f"{target} is not resolved by setting {setting.basis}")
    value = target.sign
    for l in target.support:
        value *= int(outcomes[l])
    return value
