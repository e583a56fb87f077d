"""Stabilizer codes, projector (QLDPC) codes and logical operators.

Built-in codes
--------------
``steane``      [[7,1,3]] CSS code from the Hamming(7,4) checks.
``five_qubit``  [[5,1,3]] code, cyclic shifts of XZZXI.
``repetition``  bit-flip code ``Z_l Z_{l+1}``.
``surface``     rotated surface code. For d=3 the nine data qubits sit on a
                3x3 grid (index ``3*row + col``); bulk plaquettes are X on
                {0,1,3,4}, {4,5,7,8} and Z on {1,2,4,5}, {3,4,6,7}; boundary
                checks are X on {1,2}, {6,7} and Z on {0,3}, {5,8}.
                For d=2 the code is XXXX with Z0Z2, Z1Z3.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .pauli import PauliError, PauliOperator, commutes, multiply, symplectic_rank

MAX_DENSE_QUBITS = 12


class CodeError(ValueError):
    """Invalid code definitions or unsupported parameters."""


def _require_dense(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise CodeError(f"n={n} exceeds the dense limit of {MAX_DENSE_QUBITS} qubits")


# ---------------------------------------------------------------------------
# stabilizer codes


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    k: int
    generators: tuple[PauliOperator, ...]
    name: str = "code"

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        m = len(gens)
        if m != self.n - self.k:
            raise CodeError(f"{self.name}: expected {self.n - self.k} generators, got {m}")
        for g in gens:
            if g.n != self.n:
                raise CodeError(f"{self.name}: generator {g} is not on {self.n} qubits")
            if not g.is_hermitian:
                raise CodeError(f"{self.name}: generator {g} has an imaginary phase")
            if g.is_identity:
                raise CodeError(f"{self.name}: generator {g} is ±I")
        for i, j in itertools.combinations(range(m), 2):
            if not commutes(gens[i], gens[j]):
                raise CodeError(f"{self.name}: generators {i} and {j} anticommute")
        if symplectic_rank(gens) != m:
            raise CodeError(f"{self.name}: generators are not independent")

    @property
    def m(self) -> int:
        return len(self.generators)

    def with_generators(self, generators: Sequence[PauliOperator]) -> StabilizerCode:
        return StabilizerCode(self.n, self.k, tuple(generators), self.name)

    def group_element(self, bits: int) -> PauliOperator:
        """Product of the generators selected by the bits of ``bits``."""
        out = PauliOperator.identity(self.n)
        for i, g in enumerate(self.generators):
            if (bits >> i) & 1:
                out = multiply(out, g)
        return out

    def group(self) -> Iterator[PauliOperator]:
        for bits in range(1 << self.m):
            yield self.group_element(bits)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "k": self.k,
            "generators": [str(g) for g in self.generators],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> StabilizerCode:
        gens = tuple(PauliOperator.from_label(g) for g in data["generators"])
        return cls(int(data["n"]), int(data["k"]), gens, data.get("name", "code"))


def _css_from_checks(checks: Sequence[str], name: str) -> StabilizerCode:
    n = len(checks[0])
    gens = []
    for letter in "XZ":
        for row in checks:
            gens.append(
                PauliOperator.from_label("".join(letter if c == "1" else "I" for c in row))
            )
    return StabilizerCode(n, n - len(gens), tuple(gens), name)


def _from_support_lists(n: int, spec: Sequence[tuple[str, Sequence[int]]], name: str):
    gens = tuple(PauliOperator.from_letters({q: letter for q in qs}, n) for letter, qs in spec)
    return StabilizerCode(n, n - len(gens), gens, name)


def builtin_code(name: str, param: int | None = None) -> StabilizerCode:
    """Return a validated built-in code.

    ``name`` may carry its parameter inline, e.g. ``"repetition(5)"`` or
    ``"surface3"``.
    """
    key = name.lower().replace("-", "_").replace(" ", "")
    if "(" in key:
        key, _, rest = key.partition("(")
        param = int(rest.rstrip(")"))
    elif key[-1:].isdigit() and key.rstrip("0123456789") in ("repetition", "surface"):
        stem = key.rstrip("0123456789")
        param = int(key[len(stem):])
        key = stem

    if key == "steane":
        return _css_from_checks(["1010101", "0110011", "0001111"], "steane")
    if key in ("five_qubit", "fivequbit", "five"):
        gens = tuple(PauliOperator.from_label(s) for s in ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"))
        return StabilizerCode(5, 1, gens, "five_qubit")
    if key == "repetition":
        n = 3 if param is None else param
        if not 2 <= n <= MAX_DENSE_QUBITS:
            raise CodeError(f"repetition code needs 2 <= n <= {MAX_DENSE_QUBITS}, got {n}")
        return _from_support_lists(n, [("Z", (l, l + 1)) for l in range(n - 1)], f"repetition{n}")
    if key == "surface":
        d = 3 if param is None else param
        if d == 2:
            return _from_support_lists(4, [("X", (0, 1, 2, 3)), ("Z", (0, 2)), ("Z", (1, 3))], "surface2")
        if d == 3:
            layout = [
                ("X", (0, 1, 3, 4)),
                ("X", (4, 5, 7, 8)),
                ("X", (1, 2)),
                ("X", (6, 7)),
                ("Z", (1, 2, 4, 5)),
                ("Z", (3, 4, 6, 7)),
                ("Z", (0, 3)),
                ("Z", (5, 8)),
            ]
            return _from_support_lists(9, layout, "surface3")
        raise CodeError(f"surface code distance must be 2 or 3, got {d}")
    raise CodeError(f"unknown code {name!r}")


def load_code(path: str | Path) -> StabilizerCode:
    return StabilizerCode.from_dict(json.loads(Path(path).read_text()))


def save_code(code: StabilizerCode, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# dense helpers


def apply_pauli_left(p: PauliOperator, mat: np.ndarray) -> np.ndarray:
    """``P @ mat`` without forming P densely."""
    rows, values = p._column_phases()
    out = np.empty_like(mat, dtype=complex)
    if mat.ndim == 1:
        out[rows] = values * mat
    else:
        out[rows] = values[:, None] * mat
    return out


def embed_local(matrix: np.ndarray, support: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator on ``support`` (first listed qubit most significant) to n qubits."""
    _require_dense(n)
    support = list(support)
    s = len(support)
    rest = [q for q in range(n) if q not in support]
    full = np.kron(matrix, np.eye(1 << (n - s)))
    perm = support + rest
    inv = list(np.argsort(perm))
    full = full.reshape((2,) * (2 * n)).transpose(inv + [n + i for i in inv])
    return full.reshape(1 << n, 1 << n)


def code_projector_dense(code: StabilizerCode) -> np.ndarray:
    """``prod_i (I + S_i)/2`` as a dense 2^n matrix."""
    _require_dense(code.n)
    proj = np.eye(1 << code.n, dtype=complex)
    for g in code.generators:
        proj = 0.5 * (proj + apply_pauli_left(g, proj))
    return proj


def code_projector_group_sum(code: StabilizerCode) -> np.ndarray:
    """``2^-m sum_{S in group} S``; independent of :func:`code_projector_dense`."""
    _require_dense(code.n)
    dim = 1 << code.n
    out = np.zeros((dim, dim), dtype=complex)
    for s in code.group():
        out += s.to_matrix()
    return out / (1 << code.m)


# ---------------------------------------------------------------------------
# projector codes


@dataclass(frozen=True)
class LocalProjector:
    support: tuple[int, ...]
    matrix: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        dim = 1 << len(self.support)
        if mat.shape != (dim, dim):
            raise CodeError(f"projector on {self.support} must be {dim}x{dim}, got {mat.shape}")
        if len(set(self.support)) != len(self.support):
            raise CodeError(f"repeated qubit in support {self.support}")

    def embed(self, n: int) -> np.ndarray:
        return embed_local(self.matrix, self.support, n)

    def on_qubits(self, qubits: Sequence[int]) -> np.ndarray:
        """This projector lifted onto the ordered qubit list ``qubits``."""
        pos = [list(qubits).index(q) for q in self.support]
        return embed_local(self.matrix, pos, len(qubits))


@dataclass(frozen=True)
class ProjectorCode:
    n: int
    projectors: tuple[LocalProjector, ...]
    name: str = "pcode"
    tol: float = 1e-10

    def __post_init__(self):
        projs = tuple(self.projectors)
        object.__setattr__(self, "projectors", projs)
        for i, pi in enumerate(projs):
            if any(q < 0 or q >= self.n for q in pi.support):
                raise CodeError(f"{self.name}: projector {i} support out of range")
            mat = pi.matrix
            if np.abs(mat - mat.conj().T).max() > self.tol:
                raise CodeError(f"{self.name}: projector {i} is not Hermitian")
            if np.abs(mat @ mat - mat).max() > self.tol:
                raise CodeError(f"{self.name}: projector {i} is not idempotent")
        for i, j in itertools.combinations(range(len(projs)), 2):
            a, b = projs[i], projs[j]
            if not set(a.support) & set(b.support):
                continue
            union = sorted(set(a.support) | set(b.support))
            ma, mb = a.on_qubits(union), b.on_qubits(union)
            if np.abs(ma @ mb - mb @ ma).max() > self.tol:
                raise CodeError(f"{self.name}: projectors {i} and {j} do not commute")

    @property
    def m(self) -> int:
        return len(self.projectors)

    @property
    def sparsity(self) -> int:
        return max((len(p.support) for p in self.projectors), default=0)

    @property
    def max_qubit_degree(self) -> int:
        counts = [0] * self.n
        for p in self.projectors:
            for q in p.support:
                counts[q] += 1
        return max(counts, default=0)

    @property
    def is_ldpc(self) -> bool:
        """Every qubit lies in at most ``sparsity`` supports."""
        return self.max_qubit_degree <= self.sparsity

    def dense_projector(self) -> np.ndarray:
        _require_dense(self.n)
        out = np.eye(1 << self.n, dtype=complex)
        for p in self.projectors:
            out = p.embed(self.n) @ out
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "projectors": [
                {
                    "support": list(p.support),
                    "real": [float(v) for v in p.matrix.real.ravel()],
                    "imag": [float(v) for v in p.matrix.imag.ravel()],
                }
                for p in self.projectors
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> ProjectorCode:
        projs = []
        for entry in data["projectors"]:
            dim = 1 << len(entry["support"])
            mat = np.array(entry["real"], dtype=float) + 1j * np.array(entry["imag"], dtype=float)
            projs.append(LocalProjector(tuple(entry["support"]), mat.reshape(dim, dim)))
        return cls(int(data["n"]), tuple(projs), data.get("name", "pcode"))


def local_pauli_matrix(p: PauliOperator) -> tuple[tuple[int, ...], np.ndarray]:
    """Restrict a Pauli to its support: ``(support, matrix on support)``."""
    support = p.support
    sub = PauliOperator.from_letters(
        {i: p.letter(q) for i, q in enumerate(support)}, len(support), p.sign
    )
    return support, sub.to_matrix()


def projector_code_from_stabilizers(code: StabilizerCode, max_support: int | None = None) -> ProjectorCode:
    """``pi_i = (I + S_i)/2`` restricted to ``supp(S_i)``."""
    projs = []
    for i, g in enumerate(code.generators):
        if max_support is not None and g.weight > max_support:
            raise CodeError(f"generator {i} has support {g.weight} > cap {max_support}")
        support, mat = local_pauli_matrix(g)
        projs.append(LocalProjector(support, 0.5 * (np.eye(len(mat)) + mat)))
    return ProjectorCode(code.n, tuple(projs), code.name)


def rotation(angle: float, axis: str = "y") -> np.ndarray:
    """``exp(-i angle sigma_axis / 2)``."""
    sigma = PauliOperator.from_label(axis.upper()).to_matrix()
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * sigma


def rotated_projector_code(
    base: StabilizerCode,
    angles: Sequence[float] | Sequence[Mapping[int, float]],
    axis: str = "y",
) -> ProjectorCode:
    """Conjugate the stabilizer projectors of ``base`` by single-qubit rotations.

    ``angles`` is either one angle per qubit (the same rotation applied to every
    projector touching that qubit, which always preserves commutation) or one
    ``{qubit: angle}`` mapping per projector. The second form can break
    commutation, in which case :class:`CodeError` is raised.
    """
    pcode = projector_code_from_stabilizers(base)
    angles = list(angles)
    per_projector = bool(angles) and isinstance(angles[0], Mapping)
    if per_projector and len(angles) != pcode.m:
        raise CodeError(f"need {pcode.m} per-projector angle maps, got {len(angles)}")
    if not per_projector and len(angles) != base.n:
        raise CodeError(f"need {base.n} per-qubit angles, got {len(angles)}")

    projs = []
    for i, pi in enumerate(pcode.projectors):
        u = np.eye(1)
        for q in pi.support:
            theta = angles[i].get(q, 0.0) if per_projector else angles[q]
            u = np.kron(u, rotation(theta, axis))
        projs.append(LocalProjector(pi.support, u @ pi.matrix @ u.conj().T))
    return ProjectorCode(base.n, tuple(projs), f"{base.name}_rotated")


# ---------------------------------------------------------------------------
# logical operators


def _gf2_nullspace(rows: list[int], width: int) -> list[int]:
    """Basis of {v : popcount(row & v) even for every row}, vectors as ints."""
    pivots: list[tuple[int, int]] = []
    for r in rows:
        for bit, prow in pivots:
            if (r >> bit) & 1:
                r ^= prow
        if r:
            bit = r.bit_length() - 1
            pivots = [(b, p ^ r if (p >> bit) & 1 else p) for b, p in pivots]
            pivots.append((bit, r))
    pivot_bits = {b for b, _ in pivots}
    basis = []
    for free in range(width):
        if free in pivot_bits:
            continue
        v = 1 << free
        for bit, prow in pivots:
            if (prow >> free) & 1:
                v |= 1 << bit
        basis.append(v)
    return basis


def _sym_product(u: int, v: int, n: int) -> int:
    mask = (1 << n) - 1
    ux, uz, vx, vz = u & mask, u >> n, v & mask, v >> n
    return (bin(ux & vz).count("1") + bin(uz & vx).count("1")) & 1


def _from_symplectic(v: int, n: int) -> PauliOperator:
    mask = (1 << n) - 1
    return PauliOperator(n, v & mask, v >> n, 0)


@dataclass(frozen=True)
class LogicalOperatorSet:
    code: StabilizerCode
    x_bar: tuple[PauliOperator, ...]
    z_bar: tuple[PauliOperator, ...]

    @property
    def k(self) -> int:
        return len(self.x_bar)

    def labels(self) -> list[str]:
        return ["".join(t) for t in itertools.product("IXYZ", repeat=self.k)]

    def operator(self, label: str) -> PauliOperator:
        if len(label) != self.k:
            raise CodeError(f"logical label {label!r} must have length {self.k}")
        out = PauliOperator.identity(self.code.n)
        for j, ch in enumerate(label.upper()):
            if ch == "X":
                out = multiply(out, self.x_bar[j])
            elif ch == "Z":
                out = multiply(out, self.z_bar[j])
            elif ch == "Y":
                y = multiply(self.x_bar[j], self.z_bar[j])
                out = multiply(out, PauliOperator(y.n, y.x, y.z, y.phase + 1))
            elif ch != "I":
                raise CodeError(f"bad logical letter {ch!r}")
        return out

    @property
    def logicals(self) -> dict[str, PauliOperator]:
        return {lab: self.operator(lab) for lab in self.labels()}

    def basis_states(self) -> np.ndarray:
        """Columns are the encoded computational states ``|a>_L``, a in [0, 2^k)."""
        code = self.code
        _require_dense(code.n)
        checks = list(code.generators) + list(self.z_bar)
        zero = None
        for b in range(1 << code.n):
            v = np.zeros(1 << code.n, dtype=complex)
            v[b] = 1.0
            for g in checks:
                v = 0.5 * (v + g.apply(v))
            if np.linalg.norm(v) > 1e-6:
                zero = v / np.linalg.norm(v)
                break
        if zero is None:
            raise CodeError("could not construct the logical zero state")
        lead = np.argmax(np.abs(zero) > 1e-9)
        zero = zero * (abs(zero[lead]) / zero[lead])
        cols = []
        for a in range(1 << self.k):
            v = zero
            for j in range(self.k):
                if (a >> (self.k - 1 - j)) & 1:
                    v = self.x_bar[j].apply(v)
            cols.append(v)
        return np.stack(cols, axis=1)

    def encode(self, amplitudes: Sequence[complex]) -> np.ndarray:
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.shape != (1 << self.k,):
            raise CodeError(f"need {1 << self.k} logical amplitudes")
        amps = amps / np.linalg.norm(amps)
        return self.basis_states() @ amps


def _min_weight_rep(op: PauliOperator, code: StabilizerCode) -> PauliOperator:
    best, best_key = op, (op.weight, bin(op.x & op.z).count("1"))
    for bits in range(1, 1 << code.m):
        cand = multiply(op, code.group_element(bits)).unsigned()
        key = (cand.weight, bin(cand.x & cand.z).count("1"))
        if key < best_key:
            best, best_key = cand, key
    return best


def logical_paulis(code: StabilizerCode, minimize: bool = True) -> LogicalOperatorSet:
    """Logical X and Z representatives via symplectic Gram-Schmidt.

    With ``minimize`` each representative is replaced by a minimum-weight
    element of its stabilizer coset (brute force, m <= 14 only).
    """
    n = code.n
    # <v, s> = popcount(vx & sz) + popcount(vz & sx): dot v with the swapped s
    rows = [(g.z) | (g.x << n) for g in code.generators]
    normalizer = _gf2_nullspace(rows, 2 * n)
    if len(normalizer) != n + code.k:
        raise CodeError("normalizer has the wrong dimension; invalid code")

    pool = list(normalizer)
    xs, zs = [], []
    while pool:
        v = pool.pop(0)
        partner = next((i for i, w in enumerate(pool) if _sym_product(v, w, n)), None)
        if partner is None:
            continue  # v lies in the stabilizer group
        w = pool.pop(partner)
        xs.append(v)
        zs.append(w)
        pool = [
            u ^ (w if _sym_product(u, v, n) else 0) ^ (v if _sym_product(u, w, n) else 0)
            for u in pool
        ]
    if len(xs) != code.k:
        raise CodeError(f"found {len(xs)} logical pairs, expected k={code.k}")

    x_bar = [_from_symplectic(v, n) for v in xs]
    z_bar = [_from_symplectic(v, n) for v in zs]
    if minimize and code.m <= 14:
        x_bar = [_min_weight_rep(p, code) for p in x_bar]
        z_bar = [_min_weight_rep(p, code) for p in z_bar]
    return LogicalOperatorSet(code, tuple(x_bar), tuple(z_bar))


def logical_state(code: StabilizerCode, spec: str | Sequence[complex]) -> np.ndarray:
    """Encoded pure state from a per-qubit label string or logical amplitudes.

    Labels per logical qubit: ``0 1 + - T`` (``T`` is ``(|0> + e^{i pi/4}|1>)/sqrt 2``).
    """
    logs = logical_paulis(code)
    if isinstance(spec, str):
        single = {
            "0": np.array([1, 0], dtype=complex),
            "1": np.array([0, 1], dtype=complex),
            "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
            "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
            "T": np.array([1, np.exp(1j * np.pi / 4)], dtype=complex) / np.sqrt(2),
        }
        if len(spec) != code.k or any(c.upper() not in single for c in spec):
            raise CodeError(f"bad logical state label {spec!r} for k={code.k}")
        amps = np.ones(1, dtype=complex)
        for c in spec:
            amps = np.kron(amps, single[c.upper()])
        return logs.encode(amps)
    return logs.encode(spec)


__all__ = [
    "CodeError",
    "LocalProjector",
    "LogicalOperatorSet",
    "MAX_DENSE_QUBITS",
    "PauliError",
    "ProjectorCode",
    "StabilizerCode",
    "apply_pauli_left",
    "builtin_code",
    "code_projector_dense",
    "code_projector_group_sum",
    "embed_local",
    "load_code",
    "logical_paulis",
    "logical_state",
    "projector_code_from_stabilizers",
    "rotated_projector_code",
    "save_code",
]
