"""Logical-subspace fidelity estimation and the two-stage verify-then-estimate protocol.

The estimator samples logical Paulis with weight ``p(P) = <psi|P|psi>^2 / 2^k``
and averages single-shot +-1 outcomes divided by ``<psi|P|psi>``; its mean is
the logical fidelity ``(1/2^k) sum_P <psi|P|psi> Tr(P rho)``. All logarithms
are natural.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .codes import LogicalOperatorSet, StabilizerCode, logical_paulis, logical_state
from .pauli import PauliOperator
from .simulate import CampaignContext, run_campaign, trial_rng
from .stats import VerificationPlan
from .strategies import VerificationStrategy, code_subspace_projector

WEIGHT_TOL = 1e-12


class DfeError(ValueError):
    pass


@dataclass(frozen=True)
class LogicalTarget:
    code: StabilizerCode
    psi: np.ndarray = field(repr=False)
    labels: tuple[str, ...]
    operators: tuple[PauliOperator, ...] = field(repr=False)
    characters: np.ndarray = field(repr=False)  # <psi|P|psi> per label

    @classmethod
    def from_spec(cls, code: StabilizerCode, spec="0") -> LogicalTarget:
        """Build from per-logical-qubit labels (``0 1 + - T``) or k-qubit amplitudes."""
        logicals: LogicalOperatorSet = logical_paulis(code)
        psi = logical_state(code, spec)
        labels = tuple("".join(t) for t in itertools.product("IXYZ", repeat=code.k))
        ops = tuple(logicals.operator(lab) for lab in labels)
        chars = np.array([np.vdot(psi, op.apply(psi)).real for op in ops])
        target = cls(code, psi, labels, ops, chars)
        target.validate()
        return target

    @property
    def k(self) -> int:
        return self.code.k

    @property
    def weights(self) -> np.ndarray:
        return self.characters**2 / 2**self.k

    def validate(self) -> None:
        if abs(np.linalg.norm(self.psi) - 1) > 1e-10:
            raise DfeError("target is not normalised")
        proj = code_subspace_projector(self.code)
        if np.linalg.norm(proj @ self.psi - self.psi) > 1e-8:
            raise DfeError("target is not in the code space")
        w = self.weights
        if abs(w.sum() - 1) > WEIGHT_TOL:
            raise DfeError(f"character weights sum to {w.sum()}")

    def to_dict(self) -> dict:
        return {
            "code": self.code.name,
            "k": self.k,
            "weights": {lab: float(w) for lab, w in zip(self.labels, self.weights) if w > WEIGHT_TOL},
        }


def logical_fidelity_exact(target: LogicalTarget, rho: np.ndarray) -> float:
    vals = np.array([op.expectation(rho).real for op in target.operators])
    return float(np.dot(target.characters, vals) / 2**target.k)


def _cdf(target: LogicalTarget) -> np.ndarray:
    w = np.where(target.weights > WEIGHT_TOL, target.weights, 0.0)
    cdf = np.cumsum(w) / w.sum()
    cdf[-1] = 1.0
    return cdf


def sample_logical_indices(target: LogicalTarget, rng: np.random.Generator, size: int) -> np.ndarray:
    """Inverse-CDF draws; labels with (numerically) zero weight are never returned."""
    return np.searchsorted(_cdf(target), rng.random(size), side="right")


def sample_logical_pauli(target: LogicalTarget, rng: np.random.Generator) -> PauliOperator:
    return target.operators[int(sample_logical_indices(target, rng, 1)[0])]


def dfe_sample_count(eps: float, delta: float) -> int:
    return math.ceil(8 / (eps * eps * delta))


def dfe_shot_counts(target: LogicalTarget, delta: float) -> np.ndarray:
    """Shots per label, ``ceil(delta ln(4/delta) / (2^k p))`` floored at 1 (0 for unused labels)."""
    w = target.weights
    out = np.zeros(len(w), dtype=np.int64)
    used = w > WEIGHT_TOL
    raw = delta * math.log(4 / delta) / (2**target.k * w[used])
    out[used] = np.maximum(1, np.ceil(raw - 1e-12)).astype(np.int64)
    return out


@dataclass
class DfeOutcome:
    y: float
    l: int
    eps: float
    delta: float
    total_shots: int
    expected_shots: float
    label_counts: dict[str, int]  # sampled label -> times drawn
    shots: dict[str, int]  # label -> m_i

    @property
    def lower_bound(self) -> float:
        return self.y - 2 * self.eps

    @property
    def confidence(self) -> float:
        return 1 - 2 * self.delta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lower_bound"] = self.lower_bound
        d["confidence"] = self.confidence
        return d


def dfe_estimate(
    target: LogicalTarget,
    rho: np.ndarray,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    expectations: np.ndarray | None = None,
) -> DfeOutcome:
    """One run of the logical estimator.

    Each shot of label ``P`` is a +-1 outcome with mean ``Tr(P rho)``; the
    ``2^{k/2}`` outcome scaling cancels against the estimator's normalisation
    and is therefore not materialised.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise DfeError("eps and delta must lie in (0, 1)")
    if expectations is None:
        expectations = np.array([op.expectation(rho).real for op in target.operators])
    l = dfe_sample_count(eps, delta)
    m = dfe_shot_counts(target, delta)
    idx = sample_logical_indices(target, rng, l)
    q = np.clip((1 + expectations[idx]) / 2, 0.0, 1.0)
    plus = rng.binomial(m[idx], q)
    means = (2 * plus - m[idx]) / m[idx]
    y = float(np.mean(means / target.characters[idx]))
    uniq, counts = np.unique(idx, return_counts=True)
    w = target.weights
    return DfeOutcome(
        y=y,
        l=l,
        eps=eps,
        delta=delta,
        total_shots=int(m[idx].sum()),
        expected_shots=float(l * np.dot(w, m)),
        label_counts={target.labels[i]: int(c) for i, c in zip(uniq, counts)},
        shots={target.labels[i]: int(m[i]) for i in uniq},
    )


def direct_dfe_cost(n: int, eps: float, delta: float) -> float:
    """Shot count of estimating fidelity over all physical Paulis."""
    return 1 / (eps * eps * delta) + 2**n * math.log(1 / delta) / (eps * eps)


@dataclass
class CompositeReport:
    decision: str
    n1: int
    n1_pass: int
    n2: int
    dfe: DfeOutcome | None
    direct_cost: float
    seed: int
    trial: int

    @property
    def total(self) -> int:
        return self.n1 + self.n2

    @property
    def claim(self) -> float | None:
        """Certified fidelity lower bound, or None when stage 1 rejected."""
        return None if self.dfe is None else self.dfe.lower_bound

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "n1": self.n1,
            "n1_pass": self.n1_pass,
            "n2": self.n2,
            "total": self.total,
            "direct_dfe_cost": self.direct_cost,
            "fidelity_lower_bound": self.claim,
            "confidence": None if self.dfe is None else self.dfe.confidence,
            "dfe": None if self.dfe is None else self.dfe.to_dict(),
            "seed": self.seed,
            "trial": self.trial,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


COMPOSITE_CSV_FIELDS = ("trial", "seed", "decision", "n1", "n1_pass", "n2", "y", "lower_bound")


def composites_to_csv(reports: Sequence[CompositeReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPOSITE_CSV_FIELDS)
    for r in reports:
        y = "" if r.dfe is None else repr(r.dfe.y)
        lb = "" if r.dfe is None else repr(r.claim)
        writer.writerow([r.trial, r.seed, r.decision, r.n1, r.n1_pass, r.n2, y, lb])
    return buf.getvalue()


def composite_verify(
    target: LogicalTarget,
    rho: np.ndarray | CampaignContext,
    plan: VerificationPlan,
    strategy: VerificationStrategy,
    seed: int,
    trial: int = 0,
    expectations: np.ndarray | None = None,
) -> CompositeReport:
    """Subspace verification followed, on acceptance, by logical estimation.

    Stage 1 draws from the stream ``(seed, 0, trial)``, stage 2 from
    ``(seed, 1, trial)``; both use the plan's epsilon and delta.
    """
    if plan.regime != "perfect":
        raise DfeError("stage 1 needs a perfect verification operator")
    ctx = rho if isinstance(rho, CampaignContext) else CampaignContext(strategy, rho)
    stage1 = run_campaign(strategy, ctx, plan, seed, trial=trial, keys=(0,))
    direct = direct_dfe_cost(target.code.n, plan.epsilon, plan.delta)
    if stage1.decision == "bad":
        return CompositeReport("bad", plan.n, stage1.n_pass, 0, None, direct, seed, trial)
    rng = trial_rng(seed, 1, trial)
    out = dfe_estimate(target, ctx.rho, plan.epsilon, plan.delta, rng, expectations)
    return CompositeReport("good", plan.n, stage1.n_pass, out.total_shots, out, direct, seed, trial)
