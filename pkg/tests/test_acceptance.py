"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured numbers and
then asserts. Run ``python tests/test_acceptance.py`` for the lines alone.
Outputs of criteria 3, 5, 6 and 8 are cached so criterion 10 can rerun them
and compare CSV bytes.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from qsubver.codes import builtin_code, rotated_projector_code
from qsubver.dfe import (
    LogicalTarget,
    composite_verify,
    composites_to_csv,
    dfe_estimate,
    logical_fidelity_exact,
)
from qsubver.graphs import bitwise_graph, color, color_exact, support_graph
from qsubver.simulate import (
    CampaignContext,
    NoisySource,
    campaigns_to_csv,
    error_rate_csv,
    error_rate_experiment,
    exact_pass_probability,
    pass_probability_bounds,
    prepare_state,
    random_density_matrix,
    run_campaigns,
)
from qsubver.stats import (
    InfeasiblePlanError,
    infidelity_interval,
    make_plan,
    plan_firstorder,
    plan_perfect,
)
from qsubver.strategies import (
    KINDS,
    SpectralSummary,
    build_gen_1,
    build_strategy,
    chr1_dense_operator,
    chr1_diagnostics,
    chr1_family_fit,
    code_subspace_projector,
    dense_operator,
    spectral_summary,
)

STAB_CODES = ["steane", "five_qubit", "repetition(3)", "repetition(5)", "surface2", "surface3"]
SMALL_CODES = ["steane", "five_qubit", "repetition(3)", "repetition(5)", "surface2"]
PROJECTOR_KINDS = ("gen_s", "chr_s", "gen_1")

_CSV: dict[int, str] = {}


def report(num: int, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}", flush=True)


@pytest.fixture
def shout(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print()
            report(num, ok, detail)

    return emit


def sigma3(delta: float, trials: int) -> float:
    return 3 * math.sqrt(delta * (1 - delta) / trials)


# ---------------------------------------------------------------------------
# 1


def criterion_1():
    start = time.perf_counter()
    worst = 0.0
    for name in STAB_CODES:
        for kind in ("gen", "chr"):
            s = build_strategy(kind, builtin_code(name))
            analytic = np.sort(spectral_summary(s).eigenvalues)
            dense = np.sort(spectral_summary(s, "dense").eigenvalues)
            worst = max(worst, float(np.abs(analytic - dense).max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30
    return ok, f"max |analytic - dense| = {worst:.2e} (tol 1e-10), {elapsed:.1f}s (limit 30s)"


def test_criterion_1_spectral_formulas(shout):
    ok, detail = criterion_1()
    shout(1, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 2


def criterion_2():
    parts, ok = [], True
    for name in ("steane", "surface2", "surface3"):
        code = builtin_code(name)
        g = bitwise_graph(code.generators)
        col = color_exact(g)
        s = build_strategy("chr", code, col)
        summ = spectral_summary(s)
        good = (bool(g.edges()) and col.exact and col.num_colors == 2 and s.settings_count == 2
                and summ.delta_min == 0.5 and summ.delta_max == 1.0)
        ok &= good
        parts.append(f"{name}: edges={len(g.edges())} chi={col.num_colors} settings={s.settings_count} "
                     f"gaps=({summ.delta_min:g}, {summ.delta_max:g})")
    return ok, "; ".join(parts)


def test_criterion_2_css_two_colorable(shout):
    ok, detail = criterion_2()
    shout(2, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 3


def criterion_3():
    start = time.perf_counter()
    code = builtin_code("steane")
    strat = build_strategy("chr", code)
    plan = make_plan(0.2, 0.05, 0.25, spectral_summary(strat))
    res = error_rate_experiment(strat, plan, 2000, 3, code, "0", good_side="max")
    bound = plan.delta + sigma3(plan.delta, 2000)
    elapsed = time.perf_counter() - start
    ok = res.delta_hat_good <= bound and res.delta_hat_bad <= bound and elapsed < 300
    detail = (f"N={plan.n}, good error {res.delta_hat_good:.4f}, bad error {res.delta_hat_bad:.4f}, "
              f"bound {bound:.4f}, {elapsed:.1f}s (limit 300s)")
    return ok, detail, error_rate_csv(res)


def test_criterion_3_operating_characteristics(shout):
    ok, detail, csv_text = criterion_3()
    _CSV[3] = csv_text
    shout(3, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 4


def criterion_4():
    rng = np.random.default_rng(4)
    worst_slack, worst_sat, checked = math.inf, 0.0, 0
    cases = [(builtin_code(name), KINDS) for name in SMALL_CODES]
    cases.append((rotated_projector_code(builtin_code("repetition(3)"), [0.3] * 3), PROJECTOR_KINDS))
    for code, kinds in cases:
        proj = code_subspace_projector(code)
        rhos = np.array([random_density_matrix(code.n, rng) for _ in range(200)])
        eps = 1 - np.einsum("ij,kji->k", proj, rhos).real
        for kind in kinds:
            s = build_strategy(kind, code)
            summ = spectral_summary(s)
            vals = np.einsum("ij,kji->k", dense_operator(s), rhos).real
            lo = summ.lambda_max - summ.delta_max * eps
            hi = summ.lambda_max - summ.delta_min * eps
            worst_slack = min(worst_slack, float(np.min(vals - lo)), float(np.min(hi - vals)))
            checked += len(rhos)
            for side, which in (("min", 1), ("max", 0)):
                rho, e = prepare_state(NoisySource(code, "0", "orthogonal_mixture", 0.3, direction=side, strategy=s))
                val = exact_pass_probability(s, rho)[1]
                worst_sat = max(worst_sat, abs(val - pass_probability_bounds(summ, e)[which]))
    ok = worst_slack >= -1e-10 and worst_sat <= 1e-10
    return ok, (f"{checked} (state, strategy) pairs, worst slack {worst_slack:.2e} (>= -1e-10), "
                f"worst saturation gap {worst_sat:.2e} (<= 1e-10)")


def test_criterion_4_sandwich(shout):
    ok, detail = criterion_4()
    shout(4, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 5


def criterion_5():
    code = builtin_code("steane")
    strat = build_strategy("chr", code)
    summ = spectral_summary(strat)
    plan = replace(make_plan(0.2, 0.05, 0.25, summ), n=2000)
    rho, eps = prepare_state(NoisySource(code, "0", "orthogonal_mixture", 0.1, direction="uniform", strategy=strat))
    results = run_campaigns(strat, rho, plan, 5, 1000)
    hits = 0
    for r in results:
        est = infidelity_interval(r.n_pass, r.n, 0.05, summ)
        hits += est.lower <= eps <= est.upper
    cover = hits / len(results)
    return cover >= 0.93, f"coverage {cover:.3f} of eps_rho={eps:.3f} over 1000 runs (need >= 0.93)", \
        campaigns_to_csv([("source", r) for r in results])


def test_criterion_5_interval_coverage(shout):
    ok, detail, csv_text = criterion_5()
    _CSV[5] = csv_text
    shout(5, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 6


def criterion_6():
    pcode = rotated_projector_code(builtin_code("repetition(3)"), [0.3] * 3)
    strat = build_gen_1(pcode)
    a, d = spectral_summary(strat), spectral_summary(strat, "dense")
    dev = max(abs(a.lambda_max - d.lambda_max), abs(a.delta_min - d.delta_min), abs(a.delta_max - d.delta_max))
    plan = make_plan(0.2, 0.05, 0.25, a)
    res = error_rate_experiment(strat, plan, 1000, 6, pcode, "0")
    bound = plan.delta + sigma3(plan.delta, 1000)
    ok = (max(strat.a_values) > 1 and dev <= 1e-10 and 0.5 <= a.lambda_max <= 1
          and res.delta_hat_good <= bound and res.delta_hat_bad <= bound)
    detail = (f"max a={max(strat.a_values):.4f}, (lambda, dmin, dmax)=({a.lambda_max:.4f}, {a.delta_min:.4f}, "
              f"{a.delta_max:.4f}) dev {dev:.1e}, N={plan.n}, errors {res.delta_hat_good:.4f}/"
              f"{res.delta_hat_bad:.4f} (bound {bound:.4f})")
    return ok, detail, error_rate_csv(res)


def test_criterion_6_single_qubit_strategy(shout):
    ok, detail, csv_text = criterion_6()
    _CSV[6] = csv_text
    shout(6, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 7


def criterion_7():
    reports, dev = [], 0.0
    for m in range(2, 7):
        pcode = rotated_projector_code(builtin_code(f"repetition({m + 1})"), [0.5] * (m + 1))
        col = color(support_graph(pcode))
        diag = chr1_diagnostics(pcode, col)
        # closed form: mean over classes of prod_i (1 + 1/a_i)/2
        product = sum(math.prod(0.5 * (1 + 1 / diag["a_values"][i]) for i in cls)
                      for cls in col.classes) / col.num_colors
        top = float(np.linalg.eigvalsh(chr1_dense_operator(pcode, col))[-1])
        dev = max(dev, abs(top - diag["lambda_max"]), abs(product - diag["lambda_max"]))
        reports.append(diag)
    fit = chr1_family_fit(reports)
    ratio = max(fit["ratios"])
    ok = ratio < 1 and dev <= 1e-10
    lams = ", ".join(f"{r['lambda_max']:.4f}" for r in reports)
    return ok, f"lambda(m=2..6) = {lams}; max ratio {ratio:.4f} (< 1); dense vs closed form {dev:.1e}"


def test_criterion_7_collapse(shout):
    ok, detail = criterion_7()
    shout(7, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 8


def criterion_8():
    eps, delta, p, trials = 0.1, 0.05, 0.02, 2000
    code = builtin_code("five_qubit")
    strat = build_strategy("all", code)
    plan = make_plan(eps, delta, 0.25, spectral_summary(strat))
    target = LogicalTarget.from_spec(code, "T")
    rho, _ = prepare_state(NoisySource(code, "T", "global_depolarizing", p))
    f_star = float(np.vdot(target.psi, rho @ target.psi).real)
    f_bar = logical_fidelity_exact(target, rho)
    ctx = CampaignContext(strat, rho)
    ex = np.array([op.expectation(rho).real for op in target.operators])
    reps = [composite_verify(target, ctx, plan, strat, 8, t, ex) for t in range(trials)]
    false_claims = sum(r.decision == "good" and f_star < r.claim for r in reps) / trials
    ys = np.array([r.dfe.y for r in reps if r.dfe is not None])
    se = ys.std(ddof=1) / math.sqrt(len(ys))
    n2 = []
    for name in ("five_qubit", "steane"):
        c = builtin_code(name)
        t = LogicalTarget.from_spec(c, "T")
        pure = np.outer(t.psi, t.psi.conj())
        n2.append(dfe_estimate(t, pure, eps, delta, np.random.default_rng(0)).total_shots)
    bound = 2 * delta + sigma3(2 * delta, trials)
    ok = false_claims <= bound and abs(ys.mean() - f_bar) <= 3 * se and n2[0] == n2[1]
    detail = (f"N1={plan.n}, false-claim rate {false_claims:.4f} (bound {bound:.4f}), "
              f"mean Y {ys.mean():.4f} vs F_bar {f_bar:.4f} (3 SE {3 * se:.4f}), "
              f"F*={f_star:.4f}, N2 n=5/7: {n2[0]}/{n2[1]}")
    return ok, detail, composites_to_csv(reps)


def test_criterion_8_composite(shout):
    ok, detail, csv_text = criterion_8()
    _CSV[8] = csv_text
    shout(8, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 9


def criterion_9():
    parts, ok = [], True
    for dmin, dmax in ((0.5, 1.0), (1 / 6, 1.0)):
        summ = SpectralSummary(1.0, dmin, dmax, "analytic")
        try:
            exact = plan_perfect(1e-3, 0.05, 0.25, summ).n
            first = plan_firstorder(1e-3, 0.05, 0.25, summ)
            rel = abs(first - exact) / exact
            ok &= rel <= 0.05
            parts.append(f"gaps ({dmin:.4g}, {dmax:g}): rel err {rel:.4f} (<= 0.05)")
        except InfeasiblePlanError as exc:
            ok = False
            parts.append(f"gaps ({dmin:.4g}, {dmax:g}): infeasible at tau=0.25 ({exc})")
    summ = SpectralSummary(1.0, 0.5, 1.0, "analytic")
    ratio = plan_perfect(2e-4, 0.05, 0.25, summ).n / plan_perfect(1e-4, 0.05, 0.25, summ).n
    ok &= abs(ratio - 0.5) / 0.5 <= 0.02
    parts.append(f"N(2e-4)/N(1e-4) = {ratio:.4f} (1/2 within 2%)")
    return ok, "; ".join(parts)


def test_criterion_9_first_order(shout):
    ok, detail = criterion_9()
    shout(9, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 10


def criterion_10():
    first = dict(_CSV)
    for num, fn in ((3, criterion_3), (5, criterion_5), (6, criterion_6), (8, criterion_8)):
        if num not in first:
            first[num] = fn()[-1]
    same = {num: fn()[-1] == first[num]
            for num, fn in ((3, criterion_3), (5, criterion_5), (6, criterion_6), (8, criterion_8))}
    ok = all(same.values())
    return ok, "byte-identical CSV on rerun: " + ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in same.items())


def test_criterion_10_determinism(shout):
    ok, detail = criterion_10()
    shout(10, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for num, fn in enumerate((criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                              criterion_6, criterion_7, criterion_8, criterion_9, criterion_10), 1):
        out = fn()
        if num in (3, 5, 6, 8):
            _CSV[num] = out[-1]
        report(num, out[0], out[1])
