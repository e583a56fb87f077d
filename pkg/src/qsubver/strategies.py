"""Verification operators built from implementable two-outcome tests.

Strategy kinds
--------------
``all``    every stabilizer-group element, uniformly (sampled lazily).
``gen``    each generator with probability 1/m.
``chr``    one joint test per colour class of the bit-wise commutativity graph.
``gen_s``  each s-local projector with probability 1/m.
``chr_s``  products of same-colour projectors of the support graph.
``gen_1``  single-qubit-measurable Pauli tests from the Pauli expansion of
           each ``2 pi_i - I``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .codes import (
    LocalProjector,
    ProjectorCode,
    StabilizerCode,
    _require_dense,
    apply_pauli_left,
    code_projector_dense,
)
from .graphs import Coloring, bitwise_graph, support_graph
from .pauli import MeasurementSetting, PauliOperator, merge_setting, multiply

COEFF_CUTOFF = 1e-12
KINDS = ("all", "gen", "chr", "gen_s", "chr_s", "gen_1")


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class VerificationTest:
    """One two-outcome test ``{E, I - E}`` drawn with ``probability``.

    ``kind`` is ``"pauli"`` (E = (I + P)/2), ``"stabilizer_projector"``
    (E = prod (I + S_i)/2 over ``paulis``) or ``"local_projector"`` (E = product
    of the commuting ``projectors``).
    """

    probability: float
    kind: str
    paulis: tuple[PauliOperator, ...] = ()
    projectors: tuple[LocalProjector, ...] = field(default=(), compare=False)
    members: tuple[int, ...] = ()
    setting: MeasurementSetting | None = None

    def effect_dense(self, n: int) -> np.ndarray:
        _require_dense(n)
        dim = 1 << n
        if self.kind == "local_projector":
            out = np.eye(dim, dtype=complex)
            for p in self.projectors:
                out = p.embed(n) @ out
            return out
        out = np.eye(dim, dtype=complex)
        for p in self.paulis:
            out = 0.5 * (out + apply_pauli_left(p, out))
        return out

    def pass_probability(self, rho: np.ndarray) -> float:
        """``Tr(E rho)``."""
        n = int(round(math.log2(rho.shape[0])))
        if self.kind == "local_projector":
            val = np.trace(self.effect_dense(n) @ rho)
            return float(val.real)
        # expand prod (I + S_i)/2 over the generated subgroup
        total = 0.0
        for bits in range(1 << len(self.paulis)):
            op = PauliOperator.identity(n)
            for i, p in enumerate(self.paulis):
                if (bits >> i) & 1:
                    op = multiply(op, p)
            total += op.sign * op.unsigned().expectation(rho).real
        return total / (1 << len(self.paulis))

    def to_dict(self) -> dict:
        out = {"probability": self.probability, "kind": self.kind}
        if self.kind == "pauli":
            out["pauli"] = str(self.paulis[0])
        else:
            out["members"] = list(self.members)
        if self.setting is not None:
            out["setting"] = self.setting.basis
        return out


@dataclass(frozen=True)
class VerificationStrategy:
    kind: str
    n: int
    code_dim: int
    tests: tuple[VerificationTest, ...]
    settings_count: int
    locality: int
    m: int
    classes: tuple[tuple[int, ...], ...] = ()
    a_values: tuple[float, ...] = ()
    group_generators: tuple[PauliOperator, ...] = ()

    def __post_init__(self):
        if self.kind != "all":
            total = sum(t.probability for t in self.tests)
            if abs(total - 1.0) > 1e-12:
                raise StrategyError(f"test probabilities sum to {total}, not 1")

    @property
    def lazy(self) -> bool:
        return self.kind == "all"

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([t.probability for t in self.tests])

    def sample_group_element(self, rng: np.random.Generator) -> tuple[int, PauliOperator]:
        """Uniform stabilizer-group element from a random GF(2) combination."""
        bits = int(rng.integers(0, 1 << self.m)) if self.m else 0
        op = PauliOperator.identity(self.n)
        for i, g in enumerate(self.group_generators):
            if (bits >> i) & 1:
                op = multiply(op, g)
        return bits, op

    def group_test(self, bits: int) -> VerificationTest:
        op = PauliOperator.identity(self.n)
        for i, g in enumerate(self.group_generators):
            if (bits >> i) & 1:
                op = multiply(op, g)
        return VerificationTest(1.0 / (1 << self.m), "pauli", (op,), setting=merge_setting([op]))

    def sample_test(self, rng: np.random.Generator) -> VerificationTest:
        if self.lazy:
            bits, _ = self.sample_group_element(rng)
            return self.group_test(bits)
        idx = int(rng.choice(len(self.tests), p=self.probabilities))
        return self.tests[idx]

    def to_dict(self, summary: SpectralSummary | None = None) -> dict:
        out = {
            "kind": self.kind,
            "n": self.n,
            "settings_count": self.settings_count,
            "locality": self.locality,
        }
        if self.lazy:
            out["group_generators"] = [str(g) for g in self.group_generators]
        else:
            out["tests"] = [t.to_dict() for t in self.tests]
        if summary is not None:
            out["spectral_summary"] = summary.to_dict()
        return out

    def to_json(self, summary: SpectralSummary | None = None) -> str:
        return json.dumps(self.to_dict(summary), indent=2)


def _count_settings(tests: Sequence[VerificationTest]) -> int:
    return len({t.setting.basis for t in tests if t.setting is not None})


# ---------------------------------------------------------------------------
# stabilizer strategies


def build_all(code: StabilizerCode) -> VerificationStrategy:
    return VerificationStrategy(
        kind="all",
        n=code.n,
        code_dim=1 << code.k,
        tests=(),
        settings_count=1 << code.m,
        locality=1,
        m=code.m,
        group_generators=code.generators,
    )


def build_gen(code: StabilizerCode) -> VerificationStrategy:
    tests = tuple(
        VerificationTest(1.0 / code.m, "pauli", (g,), members=(i,), setting=merge_setting([g]))
        for i, g in enumerate(code.generators)
    )
    return VerificationStrategy(
        kind="gen",
        n=code.n,
        code_dim=1 << code.k,
        tests=tests,
        settings_count=_count_settings(tests),
        locality=1,
        m=code.m,
        classes=tuple((i,) for i in range(code.m)),
    )


def build_chr(code: StabilizerCode, coloring: Coloring) -> VerificationStrategy:
    if not coloring.is_valid_for(bitwise_graph(code.generators)):
        raise StrategyError("coloring is not valid for the bit-wise commutativity graph")
    chi = coloring.num_colors
    tests = []
    for cls in coloring.classes:
        members = tuple(code.generators[i] for i in cls)
        tests.append(
            VerificationTest(
                1.0 / chi, "stabilizer_projector", members, members=cls, setting=merge_setting(members)
            )
        )
    return VerificationStrategy(
        kind="chr",
        n=code.n,
        code_dim=1 << code.k,
        tests=tuple(tests),
        settings_count=chi,
        locality=1,
        m=code.m,
        classes=coloring.classes,
    )


# ---------------------------------------------------------------------------
# projector-code strategies


def _pcode_dim(pcode: ProjectorCode) -> int:
    """Code dimension assuming the m projectors are independent halvings."""
    return 1 << (pcode.n - pcode.m)


def build_gen_s(pcode: ProjectorCode) -> VerificationStrategy:
    tests = tuple(
        VerificationTest(1.0 / pcode.m, "local_projector", projectors=(p,), members=(i,))
        for i, p in enumerate(pcode.projectors)
    )
    return VerificationStrategy(
        kind="gen_s",
        n=pcode.n,
        code_dim=_pcode_dim(pcode),
        tests=tests,
        settings_count=pcode.m,
        locality=pcode.sparsity,
        m=pcode.m,
        classes=tuple((i,) for i in range(pcode.m)),
    )


def build_chr_s(pcode: ProjectorCode, coloring: Coloring) -> VerificationStrategy:
    if not coloring.is_valid_for(support_graph(pcode)):
        raise StrategyError("coloring is not valid for the support graph")
    chi = coloring.num_colors
    tests = tuple(
        VerificationTest(
            1.0 / chi,
            "local_projector",
            projectors=tuple(pcode.projectors[i] for i in cls),
            members=cls,
        )
        for cls in coloring.classes
    )
    return VerificationStrategy(
        kind="chr_s",
        n=pcode.n,
        code_dim=_pcode_dim(pcode),
        tests=tests,
        settings_count=chi,
        locality=pcode.sparsity,
        m=pcode.m,
        classes=coloring.classes,
    )


@dataclass(frozen=True)
class PauliDecomposition:
    """``2 pi - I = a * sum_j p_j P_j`` with every coefficient non-negative."""

    support: tuple[int, ...]
    a: float
    terms: tuple[tuple[float, PauliOperator], ...]  # Paulis act on the support only
    sum_sq: float

    def lifted(self, n: int) -> list[tuple[float, PauliOperator]]:
        out = []
        for p, op in self.terms:
            letters = {q: op.letter(i) for i, q in enumerate(self.support)}
            out.append((p, PauliOperator.from_letters(letters, n, op.sign)))
        return out


def pauli_decompose(projector: LocalProjector, tol: float = 1e-10) -> PauliDecomposition:
    mat = projector.matrix
    s = len(projector.support)
    dim = 1 << s
    if np.abs(mat @ mat - mat).max() > tol or np.abs(mat - mat.conj().T).max() > tol:
        raise StrategyError("input is not a Hermitian idempotent")
    t_op = 2 * mat - np.eye(dim)
    coeffs: list[tuple[float, PauliOperator]] = []
    for letters in itertools.product("IXYZ", repeat=s):
        p = PauliOperator.from_label("".join(letters))
        t = float(np.real(np.trace(t_op @ p.to_matrix()))) / dim
        if abs(t) < COEFF_CUTOFF:
            continue
        coeffs.append((abs(t), p if t > 0 else -p))
    sum_sq = sum(t * t for t, _ in coeffs)
    a = sum(t for t, _ in coeffs)
    if abs(sum_sq - 1.0) > tol:
        raise StrategyError(f"squared coefficients sum to {sum_sq}, expected 1")
    if not (1 - tol <= a <= dim + tol):
        raise StrategyError(f"a = {a} outside [1, 2^s]")
    terms = tuple((t / a, p) for t, p in coeffs)
    return PauliDecomposition(projector.support, a, terms, sum_sq)


def build_gen_1(pcode: ProjectorCode) -> VerificationStrategy:
    tests = []
    a_values = []
    for i, proj in enumerate(pcode.projectors):
        dec = pauli_decompose(proj)
        a_values.append(dec.a)
        for p, op in dec.lifted(pcode.n):
            tests.append(
                VerificationTest(p / pcode.m, "pauli", (op,), members=(i,), setting=merge_setting([op]))
            )
    # renormalise rounding in the p_ij / m products
    total = sum(t.probability for t in tests)
    tests = [
        VerificationTest(t.probability / total, t.kind, t.paulis, members=t.members, setting=t.setting)
        for t in tests
    ]
    return VerificationStrategy(
        kind="gen_1",
        n=pcode.n,
        code_dim=_pcode_dim(pcode),
        tests=tuple(tests),
        settings_count=_count_settings(tests),
        locality=1,
        m=pcode.m,
        classes=tuple((i,) for i in range(pcode.m)),
        a_values=tuple(a_values),
    )


def build_strategy(kind: str, code: StabilizerCode | ProjectorCode, coloring: Coloring | None = None):
    """Dispatch by kind name; colourings default to :func:`graphs.color`."""
    from .codes import projector_code_from_stabilizers
    from .graphs import color

    if kind in ("all", "gen", "chr"):
        if not isinstance(code, StabilizerCode):
            raise StrategyError(f"strategy {kind!r} needs a stabilizer code")
        if kind == "all":
            return build_all(code)
        if kind == "gen":
            return build_gen(code)
        return build_chr(code, coloring or color(bitwise_graph(code.generators)))
    pcode = code if isinstance(code, ProjectorCode) else projector_code_from_stabilizers(code)
    if kind == "gen_s":
        return build_gen_s(pcode)
    if kind == "chr_s":
        return build_chr_s(pcode, coloring or color(support_graph(pcode)))
    if kind == "gen_1":
        return build_gen_1(pcode)
    raise StrategyError(f"unknown strategy kind {kind!r}")


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectralSummary:
    lambda_max: float
    delta_min: float
    delta_max: float
    method: str
    eigenvalues: tuple[float, ...] | None = None

    def r(self, tau: float) -> float:
        return self.delta_min / (tau * self.delta_max)

    @property
    def perfect(self) -> bool:
        return abs(self.lambda_max - 1.0) <= 1e-10

    def to_dict(self) -> dict:
        return {
            "lambda_max": self.lambda_max,
            "delta_min": self.delta_min,
            "delta_max": self.delta_max,
            "method": self.method,
        }


def dense_operator(strategy: VerificationStrategy) -> np.ndarray:
    """``Omega = sum_l p_l E_l`` as a dense matrix.

    ``all`` is formed by explicitly averaging over the 2^m group elements, so it
    stays independent of the closed form ``(I + P)/2``.
    """
    n = strategy.n
    _require_dense(n)
    dim = 1 << n
    omega = np.zeros((dim, dim), dtype=complex)
    if strategy.lazy:
        for bits in range(1 << strategy.m):
            op = strategy.group_test(bits).paulis[0]
            omega += 0.5 * (np.eye(dim) + op.to_matrix())
        return omega / (1 << strategy.m)
    for t in strategy.tests:
        omega += t.probability * t.effect_dense(n)
    return omega


def _analytic_eigenvalues(strategy: VerificationStrategy) -> tuple[float, ...] | None:
    m, mult = strategy.m, strategy.code_dim
    if strategy.kind == "all":
        dim = 1 << strategy.n
        return tuple(sorted([1.0] * mult + [0.5] * (dim - mult), reverse=True))
    if strategy.kind not in ("gen", "chr") or m > 20:
        return None
    chi = len(strategy.classes)
    vals = []
    for rbits in range(1 << m):
        if strategy.kind == "gen":
            lam = 1.0 - bin(rbits).count("1") / m
        else:
            lam = sum(all(not (rbits >> i) & 1 for i in cls) for cls in strategy.classes) / chi
        vals.extend([lam] * mult)
    return tuple(sorted(vals, reverse=True))


def spectral_summary(strategy: VerificationStrategy, method: str = "analytic") -> SpectralSummary:
    if method == "dense":
        omega = dense_operator(strategy)
        ev = np.sort(np.linalg.eigvalsh(omega))[::-1]
        d_v = strategy.code_dim
        second = ev[d_v] if d_v < len(ev) else ev[-1]
        return SpectralSummary(
            lambda_max=float(ev[0]),
            delta_min=float(ev[0] - second),
            delta_max=float(ev[0] - ev[-1]),
            method="dense",
            eigenvalues=tuple(float(v) for v in ev),
        )
    if method != "analytic":
        raise StrategyError(f"unknown method {method!r}")

    kind, m = strategy.kind, strategy.m
    eig = _analytic_eigenvalues(strategy)
    if kind == "all":
        return SpectralSummary(1.0, 0.5, 0.5, "analytic", eig)
    if kind in ("gen", "gen_s"):
        return SpectralSummary(1.0, 1.0 / m, 1.0, "analytic", eig)
    if kind in ("chr", "chr_s"):
        return SpectralSummary(1.0, 1.0 / len(strategy.classes), 1.0, "analytic", eig)
    if kind == "gen_1":
        inv = [1.0 / a for a in strategy.a_values]
        return SpectralSummary(
            lambda_max=0.5 * (1.0 + sum(inv) / m),
            delta_min=1.0 / (m * max(strategy.a_values)),
            delta_max=sum(inv) / m,
            method="analytic",
        )
    raise StrategyError(f"no closed form for kind {kind!r}")


# ---------------------------------------------------------------------------
# single-qubit chromatic construction (diagnostics only)


def chr1_diagnostics(pcode: ProjectorCode, coloring: Coloring) -> dict:
    """Closed-form top eigenvalue and gaps of the chromatic single-qubit operator.

    This operator is not offered as a strategy: its spectrum collapses
    exponentially in the class sizes whenever the ``a_i`` exceed one.
    """
    if not coloring.is_valid_for(support_graph(pcode)):
        raise StrategyError("coloring is not valid for the support graph")
    a = [pauli_decompose(p).a for p in pcode.projectors]
    chi = coloring.num_colors
    up = [0.5 * (1 + 1 / ai) for ai in a]
    down = [0.5 * (1 - 1 / ai) for ai in a]

    lam = sum(math.prod(up[i] for i in cls) for cls in coloring.classes) / chi
    d_min = min(
        (1 / a[i0]) * math.prod(up[i] for i in cls if i != i0)
        for cls in coloring.classes
        for i0 in cls
    ) / chi
    d_max = sum(
        math.prod(up[i] for i in cls) - math.prod(down[i] for i in cls) for cls in coloring.classes
    ) / chi
    return {
        "m": pcode.m,
        "chi": chi,
        "a_values": a,
        "lambda_max": lam,
        "delta_min": d_min,
        "delta_max": d_max,
    }


def chr1_dense_operator(pcode: ProjectorCode, coloring: Coloring) -> np.ndarray:
    n = pcode.n
    _require_dense(n)
    dim = 1 << n
    chi = coloring.num_colors
    omega = np.zeros((dim, dim), dtype=complex)
    for cls in coloring.classes:
        term = np.eye(dim, dtype=complex)
        for i in cls:
            a = pauli_decompose(pcode.projectors[i]).a
            term = term @ (pcode.projectors[i].embed(n) / a + (1 - 1 / a) * np.eye(dim) / 2)
        omega += term
    return omega / chi


def chr1_family_fit(reports: Sequence[dict]) -> dict:
    """Least-squares fit ``log lambda ~ intercept + slope * m`` across a family."""
    ms = np.array([r["m"] for r in reports], dtype=float)
    logs = np.log([r["lambda_max"] for r in reports])
    slope, intercept = np.polyfit(ms, logs, 1)
    ratios = [reports[i + 1]["lambda_max"] / reports[i]["lambda_max"] for i in range(len(reports) - 1)]
    return {"slope": float(slope), "intercept": float(intercept), "ratios": ratios}


def code_subspace_projector(code: StabilizerCode | ProjectorCode) -> np.ndarray:
    if isinstance(code, StabilizerCode):
        return code_projector_dense(code)
    return code.dense_projector()
