"""Command-line front end.

Exit codes: 0 success (or source accepted), 2 source rejected, 1 any error,
including usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .codes import (
    CodeError,
    ProjectorCode,
    StabilizerCode,
    builtin_code,
    load_code,
    rotated_projector_code,
)
from .dfe import LogicalTarget, composite_verify
from .simulate import (
    NoisySource,
    campaigns_to_csv,
    error_rate_experiment,
    prepare_state,
    run_campaigns,
)
from .stats import InfeasiblePlanError, infidelity_interval, make_plan
from .strategies import KINDS, build_strategy, spectral_summary

EXIT_OK, EXIT_ERROR, EXIT_REJECTED = 0, 1, 2

DEFAULTS = {
    "code": "steane",
    "strategy": "chr",
    "epsilon": 0.2,
    "delta": 0.05,
    "tau": 0.25,
    "noise": "none",
    "seed": 0,
    "trials": 200,
    "mode": "marginal",
    "logical": None,  # "0" for simulate, "T" for dfe
    "out": None,
}
OVERRIDABLE = tuple(k for k in DEFAULTS if k != "out")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config resolution


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the ``--config`` JSON file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
        loaded = json.loads(path.read_text())
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("epsilon", "delta", "tau"):
        if not 0 < float(cfg[key]) < 1:
            raise UsageError(f"{key} must lie in (0, 1)")
    if int(cfg["trials"]) < 1:
        raise UsageError("trials must be positive")
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps({k: cfg.get(k) for k in ("command", *OVERRIDABLE)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_code(spec: str) -> StabilizerCode | ProjectorCode:
    """Built-in name, JSON file, or ``rotated:<base>:<angle>[:<axis>]``."""
    if spec.startswith("rotated:"):
        parts = spec.split(":")
        if len(parts) not in (3, 4):
            raise UsageError("rotated codes are written rotated:<base>:<angle>[:<axis>]")
        base = builtin_code(parts[1])
        axis = parts[3] if len(parts) == 4 else "y"
        return rotated_projector_code(base, [float(parts[2])] * base.n, axis)
    path = Path(spec)
    if path.suffix == ".json":
        if not path.exists():
            raise UsageError(f"code file {path} does not exist")
        data = json.loads(path.read_text())
        return ProjectorCode.from_dict(data) if "projectors" in data else load_code(path)
    try:
        return builtin_code(spec)
    except (CodeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def parse_noise(code, spec: str, strategy=None, logical="0") -> NoisySource:
    """``none``, ``mixture:<eps>[:uniform|min|max]``, ``depolarizing:<p>``,
    ``local:<p>`` or ``overrotation:<angle>[:<axis>]``."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "none":
            return NoisySource(code, logical)
        if kind == "mixture":
            direction = parts[2] if len(parts) > 2 else "uniform"
            return NoisySource(code, logical, "orthogonal_mixture", float(parts[1]), direction=direction, strategy=strategy)
        if kind == "depolarizing":
            return NoisySource(code, logical, "global_depolarizing", float(parts[1]))
        if kind == "local":
            return NoisySource(code, logical, "local_depolarizing", float(parts[1]))
        if kind == "overrotation":
            axis = parts[2] if len(parts) > 2 else "x"
            return NoisySource(code, logical, "coherent_overrotation", float(parts[1]), axis=axis)
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad noise spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown noise kind {kind!r}")


def _logical_spec(text: str):
    return text if not text.startswith("[") else json.loads(text)


def _out_dir(cfg: dict) -> Path | None:
    if cfg["out"] is None:
        return None
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(out: Path | None, name: str, text: str) -> None:
    if out is not None:
        (out / name).write_text(text)


def _table(rows: list[dict], cols: list[str]) -> str:
    cells = [[str(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(cfg: dict) -> int:
    code = parse_code(cfg["code"])
    kinds = KINDS if cfg["strategy"] == "every" else cfg["strategy"].split(",")
    rows, infeasible = [], False
    for kind in kinds:
        if kind in ("all", "gen", "chr") and not isinstance(code, StabilizerCode):
            continue
        strat = build_strategy(kind, code)
        summ = spectral_summary(strat)
        row = {"strategy": kind, "settings": strat.settings_count, **summ.to_dict()}
        try:
            plan = make_plan(cfg["epsilon"], cfg["delta"], cfg["tau"], summ)
            row.update({"N": plan.n, "p0": plan.p0, "r": plan.r})
        except InfeasiblePlanError as exc:
            infeasible = True
            row.update({"N": None, "error": str(exc)})
        rows.append(row)
    report = {"config_hash": config_hash(cfg), "code": code.name, "n": code.n, "strategies": rows}
    _write(_out_dir(cfg), "analyze.json", json.dumps(report, indent=2) + "\n")
    print(_table([{k: _fmt(v) for k, v in r.items()} for r in rows],
                 ["strategy", "settings", "lambda_max", "delta_min", "delta_max", "N"]))
    print(f"config {report['config_hash']}")
    if infeasible:
        for r in rows:
            if "error" in r:
                print(f"{r['strategy']}: {r['error']}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_simulate(cfg: dict) -> int:
    """Without noise: good/bad error-rate experiment. With noise: campaigns on that source."""
    code = parse_code(cfg["code"])
    strat = build_strategy(cfg["strategy"], code)
    plan = make_plan(cfg["epsilon"], cfg["delta"], cfg["tau"], spectral_summary(strat))
    out = _out_dir(cfg)
    h = config_hash(cfg)
    logical = _logical_spec(cfg["logical"] or "0")
    if cfg["noise"] == "none":
        res = error_rate_experiment(strat, plan, int(cfg["trials"]), int(cfg["seed"]), code, logical, mode=cfg["mode"])
        summary = {"config_hash": h, "N": plan.n, "p0": plan.p0, **res.summary()}
        csv_text = campaigns_to_csv([("good", r) for r in res.good] + [("bad", r) for r in res.bad])
    else:
        source = parse_noise(code, cfg["noise"], strat, logical)
        rho, eps = prepare_state(source)
        results = run_campaigns(strat, rho, plan, int(cfg["seed"]), int(cfg["trials"]), cfg["mode"])
        accepted = sum(r.decision == "good" for r in results)
        summary = {
            "config_hash": h,
            "N": plan.n,
            "p0": plan.p0,
            "eps_rho": eps,
            "trials": len(results),
            "accepted": accepted,
            "mean_pass_fraction": float(np.mean([r.n_pass / r.n for r in results])),
        }
        csv_text = campaigns_to_csv([("source", r) for r in results])
    _write(out, "campaigns.csv", csv_text)
    _write(out, "summary.json", json.dumps(summary, indent=2) + "\n")
    print(_table([{"key": k, "value": _fmt(v)} for k, v in summary.items()], ["key", "value"]))
    return EXIT_OK


def cmd_estimate(cfg: dict, n_pass: int, n: int) -> int:
    code = parse_code(cfg["code"])
    summ = spectral_summary(build_strategy(cfg["strategy"], code))
    est = infidelity_interval(n_pass, n, cfg["delta"], summ)
    report = {"config_hash": config_hash(cfg), "n_pass": n_pass, "n": n, **est.to_dict()}
    _write(_out_dir(cfg), "estimate.json", json.dumps(report, indent=2) + "\n")
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_dfe(cfg: dict) -> int:
    code = parse_code(cfg["code"])
    if not isinstance(code, StabilizerCode):
        raise UsageError("dfe needs a stabilizer code")
    strat = build_strategy(cfg["strategy"], code)
    plan = make_plan(cfg["epsilon"], cfg["delta"], cfg["tau"], spectral_summary(strat))
    logical = _logical_spec(cfg["logical"] or "T")
    target = LogicalTarget.from_spec(code, logical)
    rho, eps = prepare_state(parse_noise(code, cfg["noise"], strat, logical))
    rep = composite_verify(target, rho, plan, strat, int(cfg["seed"]))
    report = {"config_hash": config_hash(cfg), "eps_rho": eps, "target": target.to_dict(), **rep.to_dict()}
    _write(_out_dir(cfg), "dfe.json", json.dumps(report, indent=2) + "\n")
    rows = [
        {"key": "decision", "value": rep.decision},
        {"key": "N1", "value": rep.n1},
        {"key": "N2", "value": rep.n2},
        {"key": "Y", "value": _fmt(rep.dfe.y) if rep.dfe else "-"},
        {"key": "lower_bound", "value": _fmt(rep.claim) if rep.dfe else "-"},
        {"key": "direct_dfe_cost", "value": _fmt(rep.direct_cost)},
    ]
    print(_table(rows, ["key", "value"]))
    return EXIT_OK if rep.decision == "good" else EXIT_REJECTED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsubver", description="Code-subspace verification toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON file of default settings")
        p.add_argument("--code", help="built-in name, JSON file or rotated:<base>:<angle>")
        p.add_argument("--strategy", help=f"one of {', '.join(KINDS)}")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (created if missing)")

    p = sub.add_parser("analyze", help="spectral summary and sample size per strategy")
    common(p)

    p = sub.add_parser("simulate", help="Monte Carlo verification campaigns")
    common(p)
    p.add_argument("--noise")
    p.add_argument("--trials", type=int)
    p.add_argument("--mode", choices=("marginal", "shotwise"))
    p.add_argument("--logical")

    p = sub.add_parser("estimate", help="infidelity interval from pass counts")
    common(p)
    p.add_argument("--n-pass", type=int, required=True, dest="n_pass")
    p.add_argument("--n", type=int, required=True, dest="n_rounds")

    p = sub.add_parser("dfe", help="subspace verification then logical fidelity estimation")
    common(p)
    p.add_argument("--noise")
    p.add_argument("--logical")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        cfg["command"] = args.command
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "estimate":
            return cmd_estimate(cfg, args.n_pass, args.n_rounds)
        return cmd_dfe(cfg)
    except (UsageError, ValueError, OSError) as exc:
        print(f"qsubver: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
