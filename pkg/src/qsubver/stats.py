"""Sample-complexity planning, decisions and interval estimates.

All logarithms are natural.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from statistics import NormalDist

from .strategies import SpectralSummary

D_EQUALITY_TOL = 1e-12


class InfeasiblePlanError(ValueError):
    pass


# ---------------------------------------------------------------------------
# primitives


def kl_bernoulli(p: float, q: float) -> float:
    """``D[p || q]`` between Bernoulli(p) and Bernoulli(q), with 0 ln 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} outside [0, 1]")
    if q in (0.0, 1.0):
        if p == q:
            return 0.0
        raise ValueError(f"D[{p} || {q}] is infinite")
    out = 0.0
    if p > 0:
        out += p * math.log(p / q)
    if p < 1:
        out += (1 - p) * math.log((1 - p) / (1 - q))
    return max(out, 0.0)


_STD_NORMAL = NormalDist()


def inv_normal_cdf(x: float) -> float:
    """Standard normal quantile ``z`` with ``Phi(z) = x``."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"x={x} outside (0, 1)")
    return _STD_NORMAL.inv_cdf(x)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = inv_normal_cdf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


# ---------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class VerificationPlan:
    epsilon: float
    delta: float
    tau: float
    delta_min: float
    delta_max: float
    lambda_max: float
    r: float
    eps_tilde: float
    p0: float
    n: int
    regime: str  # "perfect" or "imperfect"
    f_r: float | None = None
    n_asymptotic: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check_unit(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name}={value} must lie in (0, 1)")


def _ratio(tau: float, summary: SpectralSummary) -> float:
    r = summary.delta_min / (tau * summary.delta_max)
    if r <= 1:
        bound = summary.delta_min / summary.delta_max
        raise InfeasiblePlanError(
            f"r = {r:.6g} <= 1: need tau < delta_min/delta_max = {bound:.6g}"
        )
    return r


def p0_threshold(eps_tilde: float, r: float) -> float:
    """Closed-form root of ``D[p || 1 - eps_tilde] = D[p || 1 - eps_tilde / r]``."""
    log_r = math.log(r)
    return log_r / (log_r + math.log((1 - eps_tilde / r) / (1 - eps_tilde)))


def f_of_r(r: float) -> float:
    """Constant of the first-order sample complexity, finite and > 1 for r > 1."""
    if r <= 1:
        raise InfeasiblePlanError(f"f(r) needs r > 1, got {r}")
    u = (1 - 1 / r) / math.log(r)
    return 1.0 / (1 + u * (math.log(u) - 1))


def plan_perfect(epsilon: float, delta: float, tau: float, summary: SpectralSummary) -> VerificationPlan:
    for name, v in (("epsilon", epsilon), ("delta", delta), ("tau", tau)):
        _check_unit(name, v)
    if not summary.perfect:
        raise InfeasiblePlanError(
            f"lambda_max = {summary.lambda_max} < 1; use plan_imperfect"
        )
    r = _ratio(tau, summary)
    eps_tilde = summary.delta_min * epsilon
    p0 = p0_threshold(eps_tilde, r)
    d_bad = kl_bernoulli(p0, 1 - eps_tilde)
    d_good = kl_bernoulli(p0, 1 - eps_tilde / r)
    if abs(d_bad - d_good) > D_EQUALITY_TOL:
        raise ArithmeticError(f"threshold equation violated: {d_bad} vs {d_good}")
    n = math.ceil(math.log(1 / delta) / d_bad)
    return VerificationPlan(
        epsilon=epsilon,
        delta=delta,
        tau=tau,
        delta_min=summary.delta_min,
        delta_max=summary.delta_max,
        lambda_max=1.0,
        r=r,
        eps_tilde=eps_tilde,
        p0=p0,
        n=n,
        regime="perfect",
        f_r=f_of_r(r),
    )


def plan_firstorder(epsilon: float, delta: float, tau: float, summary: SpectralSummary) -> float:
    """Leading-order N in epsilon (not rounded)."""
    r = _ratio(tau, summary)
    return f_of_r(r) * math.log(1 / delta) / (summary.delta_min * epsilon)


def p0_imperfect(lam: float, epsilon: float, tau: float, delta_min: float, delta_max: float) -> float:
    good = 1 - lam + delta_max * tau * epsilon
    bad = 1 - lam + delta_min * epsilon
    num = math.log(good / bad)
    return num / (num + math.log((lam - delta_min * epsilon) / (lam - delta_max * tau * epsilon)))


def plan_imperfect(epsilon: float, delta: float, tau: float, summary: SpectralSummary) -> VerificationPlan:
    for name, v in (("epsilon", epsilon), ("delta", delta), ("tau", tau)):
        _check_unit(name, v)
    lam = summary.lambda_max
    if not 0.0 < lam < 1.0:
        raise InfeasiblePlanError(f"lambda_max = {lam} must lie in (0, 1)")
    r = _ratio(tau, summary)
    q_bad = lam - summary.delta_min * epsilon
    if q_bad <= 0:
        raise InfeasiblePlanError(f"lambda - delta_min * epsilon = {q_bad} <= 0")
    p0 = p0_imperfect(lam, epsilon, tau, summary.delta_min, summary.delta_max)
    q_good = lam - summary.delta_max * tau * epsilon
    d_bad = kl_bernoulli(p0, q_bad)
    if abs(d_bad - kl_bernoulli(p0, q_good)) > D_EQUALITY_TOL:
        raise ArithmeticError("threshold equation violated")
    n = math.ceil(math.log(1 / delta) / d_bad)
    n_asym = (
        8 * lam * (1 - lam) * math.log(1 / delta)
        / ((summary.delta_min - summary.delta_max * tau) ** 2 * epsilon**2)
    )
    return VerificationPlan(
        epsilon=epsilon,
        delta=delta,
        tau=tau,
        delta_min=summary.delta_min,
        delta_max=summary.delta_max,
        lambda_max=lam,
        r=r,
        eps_tilde=summary.delta_min * epsilon,
        p0=p0,
        n=n,
        regime="imperfect",
        n_asymptotic=n_asym,
    )


def make_plan(epsilon: float, delta: float, tau: float, summary: SpectralSummary) -> VerificationPlan:
    if summary.perfect:
        return plan_perfect(epsilon, delta, tau, summary)
    return plan_imperfect(epsilon, delta, tau, summary)


def decide(n_pass: int, n: int, plan: VerificationPlan) -> str:
    """``"good"`` or ``"bad"``.

    The perfect regime uses a strict threshold ``n_pass > p0 N``; the imperfect
    regime uses ``n_pass >= p0' N``.
    """
    if n != plan.n:
        raise ValueError(f"N={n} does not match the plan's N={plan.n}")
    if not 0 <= n_pass <= n:
        raise ValueError(f"n_pass={n_pass} outside [0, {n}]")
    if plan.regime == "perfect":
        return "good" if n_pass > plan.p0 * n else "bad"
    return "good" if n_pass >= plan.p0 * n else "bad"


# ---------------------------------------------------------------------------
# estimation


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float
    xi: float
    p: float
    confidence: float

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return asdict(self)


def infidelity_interval(n_pass: int, n: int, delta: float, summary: SpectralSummary) -> IntervalEstimate:
    """Normal-approximation interval for the subspace infidelity.

    For an imperfect operator the top eigenvalue replaces 1 in ``1 - p``.
    """
    if n < 1:
        raise ValueError("N must be at least 1")
    if not 0 <= n_pass <= n:
        raise ValueError(f"n_pass={n_pass} outside [0, {n}]")
    _check_unit("delta", delta)
    p = n_pass / n
    xi = inv_normal_cdf(1 - delta / 2) * math.sqrt(p * (1 - p) / n)
    top = summary.lambda_max
    lower = min(max((top - p - xi) / summary.delta_max, 0.0), 1.0)
    upper = min((top - p + xi) / summary.delta_min, 1.0)
    upper = max(upper, lower)
    return IntervalEstimate(lower, upper, xi, p, 1 - delta)
