"""Dense simulation of noisy code states and verification campaigns.

Random streams: every campaign draws from a Philox generator seeded with a
``SeedSequence`` built from ``(seed, *keys)``, so trial ``t`` of a run gives the
same numbers whatever order trials are executed in.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .codes import (
    CodeError,
    ProjectorCode,
    StabilizerCode,
    _require_dense,
    logical_state,
    rotation,
)
from .pauli import evaluate_from_outcomes
from .stats import VerificationPlan, decide, wilson_interval
from .strategies import (
    SpectralSummary,
    VerificationStrategy,
    VerificationTest,
    code_subspace_projector,
    dense_operator,
)

PSD_CLIP = 1e-12
NOISE_KINDS = (
    "none",
    "orthogonal_mixture",
    "global_depolarizing",
    "local_depolarizing",
    "coherent_overrotation",
)


class SimulationError(ValueError):
    pass


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


# ---------------------------------------------------------------------------
# states


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Check a density matrix, clipping eigenvalues in [-1e-12, 0) to zero."""
    rho = np.asarray(rho, dtype=complex)
    if np.abs(rho - rho.conj().T).max() > tol:
        raise SimulationError("density matrix is not Hermitian")
    rho = 0.5 * (rho + rho.conj().T)
    if abs(np.trace(rho).real - 1) > tol:
        raise SimulationError(f"trace {np.trace(rho).real} != 1")
    vals, vecs = np.linalg.eigh(rho)
    if vals.min() < -PSD_CLIP:
        raise SimulationError(f"density matrix has eigenvalue {vals.min():.3g}")
    if vals.min() < 0:
        vals = np.clip(vals, 0, None)
        vals /= vals.sum()
        rho = (vecs * vals) @ vecs.conj().T
    return rho


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    dim = 1 << n
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def code_state(code: StabilizerCode | ProjectorCode, spec="0") -> np.ndarray:
    """Pure code-space state vector.

    Stabilizer codes accept logical labels or amplitudes. Projector codes
    accept an explicit state vector, or any label, in which case the projection
    of the first computational basis state with non-zero overlap is used.
    """
    if isinstance(spec, np.ndarray) and spec.shape == (1 << code.n,):
        psi = spec.astype(complex)
        return psi / np.linalg.norm(psi)
    if isinstance(code, StabilizerCode):
        return logical_state(code, spec)
    proj = code.dense_projector()
    for b in range(proj.shape[0]):
        col = proj[:, b]
        if np.linalg.norm(col) > 1e-6:
            return col / np.linalg.norm(col)
    raise CodeError("projector code has an empty code space")


def _local_depolarize(rho: np.ndarray, n: int, p: float) -> np.ndarray:
    paulis = [rotation(np.pi, a) * 1j for a in "xyz"]  # exactly X, Y, Z
    for q in range(n):
        out = (1 - 3 * p / 4) * rho
        for s in paulis:
            full = np.kron(np.kron(np.eye(1 << q), s), np.eye(1 << (n - q - 1)))
            out = out + (p / 4) * full @ rho @ full.conj().T
        rho = out
    return rho


def saturating_direction(strategy: VerificationStrategy, side: str) -> np.ndarray:
    """Pure state in the code complement whose Omega-eigenvalue is the second
    largest (``side="min"``) or smallest (``side="max"``)."""
    omega = dense_operator(strategy)
    vals, vecs = np.linalg.eigh(omega)
    order = np.argsort(vals)[::-1]
    idx = order[strategy.code_dim] if side == "min" else order[-1]
    return vecs[:, idx]


@dataclass(frozen=True)
class NoisySource:
    """A code, a logical target, and a noise model.

    ``strength`` is the infidelity for ``orthogonal_mixture``, the error
    probability for the depolarizing models and the angle for
    ``coherent_overrotation``. ``direction`` picks the orthogonal component of
    ``orthogonal_mixture``: ``uniform`` (maximally mixed on the complement),
    ``min``/``max`` (an eigenvector of ``strategy``'s operator saturating the
    respective gap).
    """

    code: StabilizerCode | ProjectorCode
    logical_state: object = "0"
    noise: str = "none"
    strength: float = 0.0
    axis: str = "x"
    direction: str = "uniform"
    strategy: VerificationStrategy | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.noise not in NOISE_KINDS:
            raise SimulationError(f"unknown noise {self.noise!r}")


def prepare_state(source: NoisySource) -> tuple[np.ndarray, float]:
    """Return ``(rho, eps_rho)`` with ``eps_rho = 1 - Tr(P rho)`` recomputed."""
    code = source.code
    n = code.n
    _require_dense(n)
    dim = 1 << n
    psi = code_state(code, source.logical_state)
    sigma = np.outer(psi, psi.conj())
    proj = code_subspace_projector(code)
    s = source.strength

    if source.noise == "none":
        rho = sigma
    elif source.noise == "orthogonal_mixture":
        if not 0 <= s <= 1:
            raise SimulationError("orthogonal_mixture needs 0 <= eps <= 1")
        if source.direction == "uniform":
            perp = np.eye(dim) - proj
            perp = perp / np.trace(perp).real
        elif source.direction in ("min", "max"):
            if source.strategy is None:
                raise SimulationError("saturating directions need a strategy")
            v = saturating_direction(source.strategy, source.direction)
            v = v - proj @ v
            v = v / np.linalg.norm(v)
            perp = np.outer(v, v.conj())
        else:
            raise SimulationError(f"unknown direction {source.direction!r}")
        rho = (1 - s) * sigma + s * perp
    elif source.noise == "global_depolarizing":
        rho = (1 - s) * sigma + s * np.eye(dim) / dim
    elif source.noise == "local_depolarizing":
        rho = _local_depolarize(sigma, n, s)
    else:
        u = np.ones((1, 1))
        for _ in range(n):
            u = np.kron(u, rotation(s, source.axis))
        rho = u @ sigma @ u.conj().T

    rho = validate_density_matrix(rho)
    eps = float(1 - np.trace(proj @ rho).real)
    return rho, eps


# ---------------------------------------------------------------------------
# exact probabilities


def exact_pass_probability(strategy: VerificationStrategy, rho: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-test ``Tr(E_l rho)`` and the aggregate ``Tr(Omega rho)``.

    For ``all`` the per-test array is indexed by the generator bit mask of the
    group element, each element having weight 2^-m.
    """
    if strategy.lazy:
        if strategy.m > 16:
            raise SimulationError("group too large to tabulate")
        probs = np.array(
            [strategy.group_test(b).pass_probability(rho) for b in range(1 << strategy.m)]
        )
        return probs, float(probs.mean())
    probs = np.array([t.pass_probability(rho) for t in strategy.tests])
    return probs, float(np.dot(strategy.probabilities, probs))


def pass_probability_bounds(summary: SpectralSummary, eps_rho: float) -> tuple[float, float]:
    """Range of ``Tr(Omega rho)`` allowed by the spectral gaps."""
    lam = summary.lambda_max
    return lam - summary.delta_max * eps_rho, lam - summary.delta_min * eps_rho


# ---------------------------------------------------------------------------
# campaigns


@dataclass
class CampaignResult:
    n: int
    n_pass: int
    tallies: dict[int, tuple[int, int]]  # test index -> (rounds, passes)
    decision: str
    seed: int
    trial: int
    mode: str
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_pass": self.n_pass,
            "decision": self.decision,
            "seed": self.seed,
            "trial": self.trial,
            "mode": self.mode,
            "tallies": {str(k): list(v) for k, v in sorted(self.tallies.items())},
        }


_BASIS_CHANGE = {
    "I": np.eye(2),
    "Z": np.eye(2),
    "X": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "Y": np.array([[1, 1], [1, -1]]) / np.sqrt(2) @ np.diag([1, -1j]),
}


class CampaignContext:
    """Per-state precomputation shared by all trials of a run."""

    def __init__(self, strategy: VerificationStrategy, rho: np.ndarray):
        self.strategy = strategy
        self.rho = rho
        self.n = strategy.n
        self.pass_probs, self.expected = exact_pass_probability(strategy, rho)
        self._shot_tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _test(self, idx: int) -> VerificationTest:
        if self.strategy.lazy:
            return self.strategy.group_test(idx)
        return self.strategy.tests[idx]

    def shot_table(self, idx: int) -> tuple[np.ndarray, np.ndarray]:
        """Outcome distribution in the test's setting and the pass flag per outcome."""
        if idx in self._shot_tables:
            return self._shot_tables[idx]
        test = self._test(idx)
        if test.setting is None:
            raise SimulationError("s-local projector tests have no single-qubit setting")
        u = np.ones((1, 1))
        for letter in test.setting.basis:
            u = np.kron(u, _BASIS_CHANGE[letter])
        dist = np.clip(np.real(np.diag(u @ self.rho @ u.conj().T)), 0, None)
        dist = dist / dist.sum()
        n = self.n
        passes = np.empty(len(dist), dtype=bool)
        for b in range(len(dist)):
            outcomes = [1 - 2 * ((b >> (n - 1 - l)) & 1) for l in range(n)]
            passes[b] = all(
                evaluate_from_outcomes(test.setting, outcomes, p) == 1 for p in test.paulis
            )
        self._shot_tables[idx] = (dist, passes)
        return dist, passes


def run_campaign(
    strategy: VerificationStrategy,
    rho: np.ndarray | CampaignContext,
    plan: VerificationPlan,
    seed: int,
    mode: str = "marginal",
    trial: int = 0,
    keys: Sequence[int] = (),
) -> CampaignResult:
    """Run ``plan.n`` rounds and classify the source.

    ``marginal`` draws a test then a Bernoulli with its exact pass probability;
    ``shotwise`` samples single-qubit outcomes in the test's setting and
    post-processes them.
    """
    start = time.perf_counter()
    ctx = rho if isinstance(rho, CampaignContext) else CampaignContext(strategy, rho)
    rng = trial_rng(seed, *keys, trial)
    n = plan.n
    if strategy.lazy:
        idx = rng.integers(0, 1 << strategy.m, size=n)
    else:
        cdf = np.cumsum(strategy.probabilities)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, rng.random(n), side="right")

    if mode == "marginal":
        passed = rng.random(n) < ctx.pass_probs[idx]
    elif mode == "shotwise":
        passed = np.empty(n, dtype=bool)
        for t in np.unique(idx):
            where = np.flatnonzero(idx == t)
            dist, table = ctx.shot_table(int(t))
            outcomes = rng.choice(len(dist), size=len(where), p=dist)
            passed[where] = table[outcomes]
    else:
        raise SimulationError(f"unknown mode {mode!r}")

    tallies: dict[int, tuple[int, int]] = {}
    for t in np.unique(idx):
        sel = idx == t
        tallies[int(t)] = (int(sel.sum()), int(passed[sel].sum()))
    n_pass = int(passed.sum())
    return CampaignResult(
        n=n,
        n_pass=n_pass,
        tallies=tallies,
        decision=decide(n_pass, n, plan),
        seed=seed,
        trial=trial,
        mode=mode,
        wall_time=time.perf_counter() - start,
    )


def run_campaigns(strategy, rho, plan, seed, trials, mode="marginal", keys=()) -> list[CampaignResult]:
    ctx = CampaignContext(strategy, rho)
    return [run_campaign(strategy, ctx, plan, seed, mode, t, keys) for t in range(trials)]


@dataclass
class ErrorRateResult:
    good: list[CampaignResult]
    bad: list[CampaignResult]
    eps_good: float
    eps_bad: float
    pass_prob_good: float
    pass_prob_bad: float

    @property
    def delta_hat_good(self) -> float:
        return sum(r.decision == "bad" for r in self.good) / len(self.good)

    @property
    def delta_hat_bad(self) -> float:
        return sum(r.decision == "good" for r in self.bad) / len(self.bad)

    def wilson(self, confidence: float = 0.95) -> dict:
        g = sum(r.decision == "bad" for r in self.good)
        b = sum(r.decision == "good" for r in self.bad)
        return {
            "good": wilson_interval(g, len(self.good), confidence),
            "bad": wilson_interval(b, len(self.bad), confidence),
        }

    def summary(self) -> dict:
        w = self.wilson()
        return {
            "trials": len(self.good),
            "eps_good": self.eps_good,
            "eps_bad": self.eps_bad,
            "pass_prob_good": self.pass_prob_good,
            "pass_prob_bad": self.pass_prob_bad,
            "delta_hat_good": self.delta_hat_good,
            "delta_hat_bad": self.delta_hat_bad,
            "wilson_good": list(w["good"]),
            "wilson_bad": list(w["bad"]),
        }


def error_rate_experiment(
    strategy: VerificationStrategy,
    plan: VerificationPlan,
    trials: int,
    seed: int,
    code: StabilizerCode | ProjectorCode,
    logical="0",
    good_side: str = "max",
    mode: str = "marginal",
) -> ErrorRateResult:
    """Misclassification rates for a saturating good case and a bad case.

    Good sources have infidelity tau*eps, placed along ``good_side`` (``max``
    gives the lowest pass probability allowed). Bad sources have infidelity eps
    along the Delta_min side, the highest pass probability allowed.
    """
    if trials < 100:
        raise SimulationError("need at least 100 trials")
    eps_good = plan.tau * plan.epsilon
    good_src = NoisySource(code, logical, "orthogonal_mixture", eps_good, direction=good_side, strategy=strategy)
    bad_src = NoisySource(code, logical, "orthogonal_mixture", plan.epsilon, direction="min", strategy=strategy)
    rho_good, e_good = prepare_state(good_src)
    rho_bad, e_bad = prepare_state(bad_src)
    ctx_good = CampaignContext(strategy, rho_good)
    ctx_bad = CampaignContext(strategy, rho_bad)
    good = [run_campaign(strategy, ctx_good, plan, seed, mode, t, keys=(0,)) for t in range(trials)]
    bad = [run_campaign(strategy, ctx_bad, plan, seed, mode, t, keys=(1,)) for t in range(trials)]
    return ErrorRateResult(good, bad, e_good, e_bad, ctx_good.expected, ctx_bad.expected)


# ---------------------------------------------------------------------------
# serialisation


CSV_FIELDS = ("case", "trial", "seed", "mode", "n", "n_pass", "pass_fraction", "decision")


def campaigns_to_csv(rows: Sequence[tuple[str, CampaignResult]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for case, r in rows:
        writer.writerow([case, r.trial, r.seed, r.mode, r.n, r.n_pass, repr(r.n_pass / r.n), r.decision])
    return buf.getvalue()


def error_rate_csv(result: ErrorRateResult) -> str:
    return campaigns_to_csv([("good", r) for r in result.good] + [("bad", r) for r in result.bad])


def campaigns_to_json(results: Sequence[CampaignResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2)
