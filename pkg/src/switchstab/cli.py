"""Command line interface.

Exit codes: 0 ok, 1 configuration error, 2 hypothesis violated, 3 grid
misalignment, 4 degenerate ensemble (every path blew up).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from . import designer, example
from .config import REPORT_SCHEMA, ConfigError, RunConfig, load_config
from .designer import Scenario
from .errors import AllPathsBlewUp, GridMisaligned, HypothesisViolated, NonpositiveCurve, NoUsablePaths
from .estimator import estimate_as_exponent, estimate_ms_exponent, integral_moment, run_ensemble
from .simulator import simulate_controlled, simulate_uncontrolled, snap_to_grid
from .spectral import Variant

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_GRID, EXIT_DEGENERATE = 0, 1, 2, 3, 4


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def run_design(rc: RunConfig, variant: Variant) -> dict:
    """Design report dict with a ``verdict``; raises :class:`HypothesisViolated`."""
    scen = Scenario(rc._need("scenario"))
    G = rc.generator()
    gains = rc.gains()
    bounds = rc.bounds()
    sim = rc.sim_section()
    x0 = sim.get("x0", 1.0)
    tau, tau0, sigma = rc.raw.get("tau"), rc.raw.get("tau0"), rc.raw.get("sigma")
    nonlinear = scen in (Scenario.NL_STABLE, Scenario.NL_STABLE_P_GE_THETA)
    if nonlinear != isinstance(bounds, designer.NonlinearBounds):
        raise ConfigError(f"config error at bounds: scenario {scen.value} needs "
                          f"{'nonlinear' if nonlinear else 'quasilinear'} bounds")
    if scen in (Scenario.QL_STABLE, Scenario.QL_UNSTABLE) or nonlinear:
        sigma = rc._need("sigma")
    try:
        if scen is Scenario.QL_BOUNDED:
            rep = designer.design_ql_bounded(G, gains, bounds, variant)
        elif scen is Scenario.QL_UNBOUNDED:
            rep = designer.design_ql_unbounded(G, gains, bounds, x0)
        elif scen is Scenario.QL_STABLE:
            rep = designer.design_ql_stable(G, gains, bounds, sigma, tau, tau0, variant)
        elif scen is Scenario.QL_UNSTABLE:
            rep = designer.design_ql_unstable(G, gains, bounds, sigma, x0)
        elif scen is Scenario.NL_STABLE:
            rep = designer.design_nl_stable(G, gains, bounds, sigma, tau, tau0, variant)
        else:
            rep = designer.design_nl_stable_p_ge_theta(G, gains, bounds, sigma, tau, tau0, variant)
    except HypothesisViolated as exc:
        exc.report = {
            "scenario": scen.value,
            "verdict": f"hypothesis {exc.condition} failed",
            "detail": exc.detail,
            "hypotheses": getattr(exc, "checks", {exc.condition: False}),
        }
        raise
    except ValueError as exc:
        raise ConfigError(f"config error: {exc}") from exc
    out = rep.to_dict()
    out["verdict"] = "ok"
    return out


def cmd_design(args) -> int:
    rc = RunConfig(load_config(args.config))
    variant = Variant(args.variant) if args.variant else rc.variant
    try:
        report = run_design(rc, variant)
        code = EXIT_OK
    except HypothesisViolated as exc:
        report = exc.report
        code = EXIT_HYPOTHESIS
    jsonschema.validate(report, REPORT_SCHEMA)
    text = _dump(report)
    print(text)
    out = _out_dir(args)
    if out:
        (out / "design.json").write_text(text + "\n")
    return code


def _law(rc: RunConfig, cfg, snap: bool):
    law = rc.law()
    adjusted = None
    if law is not None and snap:
        snapped = snap_to_grid(law, cfg.dt)
        if snapped.tau0 != law.tau0:
            adjusted = snapped.tau0
            print(f"tau0 snapped from {law.tau0:g} to {snapped.tau0:.17g}", file=sys.stderr)
        law = snapped
    return law, adjusted


def cmd_simulate(args) -> int:
    rc = RunConfig(load_config(args.config))
    out = _out_dir(args)
    if out is None:
        raise ConfigError("simulate needs --out DIR")
    model = rc.model()
    cfg = rc.sim(args.seed)
    law, adjusted = _law(rc, cfg, args.snap_to_grid)
    n_paths = rc.sim_section().get("n_paths", 1)
    paths = []
    for p in range(n_paths):
        if law is None:
            tr = simulate_uncontrolled(model, cfg, p)
        else:
            tr = simulate_controlled(model, law, cfg, p)
        name = f"path_{p:04d}.csv"
        tr.to_csv(out / name)
        paths.append({"file": name, "path_index": p, "blowup": tr.blowup, "blowup_time": tr.blowup_time})
    manifest = {
        "seed": int(cfg.seed),
        "n_paths": n_paths,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "controlled": law is not None,
        "tau": None if law is None else law.tau,
        "tau0": None if law is None else law.tau0,
        "tau0_snapped": adjusted,
        "paths": paths,
    }
    (out / "manifest.json").write_text(_dump(manifest) + "\n")
    print(_dump({"out": str(out), "n_paths": n_paths, "n_blowups": sum(p["blowup"] for p in paths)}))
    return EXIT_OK


def cmd_estimate(args) -> int:
    rc = RunConfig(load_config(args.config))
    out = _out_dir(args)
    if out is None:
        raise ConfigError("estimate needs --out DIR")
    model = rc.model()
    cfg = rc.sim(args.seed)
    law, adjusted = _law(rc, cfg, args.snap_to_grid)
    sim = rc.sim_section()
    q_list = [float(q) for q in sim.get("q_list", [2.0])]
    stats = run_ensemble(model, law, cfg, sim.get("n_paths", 1), q_list, args.threads)
    stats.to_csv(out / "moments.csv")
    q = 2.0 if 2.0 in q_list else q_list[0]
    try:
        ms = estimate_ms_exponent(stats, q, sim.get("window")).to_dict()
    except NonpositiveCurve as exc:
        ms = {"q": q, "slope": None, "stderr": None, "window": sim.get("window"), "n_paths": stats.n_paths,
              "n_blowups": stats.n_blowups, "error": str(exc), "first_zero_time": exc.first_zero_time}
    try:
        as_ = estimate_as_exponent(stats).to_dict()
    except NoUsablePaths as exc:
        as_ = {"q": None, "slope": None, "error": str(exc), "n_paths": stats.n_paths,
               "n_blowups": stats.n_blowups}
    (out / "exponent.json").write_text(_dump(ms) + "\n")
    (out / "as_exponent.json").write_text(_dump(as_) + "\n")
    summary = {"ms": ms, "as": as_, "tau0_snapped": adjusted,
               "integrals": {f"{q:g}": integral_moment(stats, q).to_dict() for q in q_list}}
    print(_dump(summary))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    variant = Variant(args.variant or Variant.FORMULA_B.value)
    rows = example.design_rows(variant)
    if variant is not Variant.FORMULA_B:
        ref = {r.name: r.value for r in example.design_rows(Variant.FORMULA_B)}
        print(f"variant {variant.value}: deviation from formula_b per design value")
        for r in rows:
            base = ref.get(r.name)
            if base and base != r.value:
                print(f"  {r.name:<46} {r.value:.6g} vs {base:.6g} ({100 * (r.value / base - 1):+.3f}%)")
    rows += example.monte_carlo_rows(args.seed or 0, args.threads, args.full)
    print(example.format_table(rows))
    out = _out_dir(args)
    if out:
        (out / "reproduce.json").write_text(_dump({"variant": variant.value,
                                                   "rows": [r.to_dict() for r in rows]}) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="directory for output files")
    common.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads (results do not depend on it)")
    common.add_argument("--variant", choices=[v.value for v in Variant], help="Lambda_tau exponent variant")

    parser = argparse.ArgumentParser(prog="switchstab", description="Stabilisation of switching diffusions by delayed sampled feedback.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config, text in (
        ("design", cmd_design, True, "check hypotheses and compute admissible sampling bounds"),
        ("simulate", cmd_simulate, True, "write sample paths as CSV"),
        ("estimate", cmd_estimate, True, "Monte Carlo moment curves and exponent estimates"),
        ("reproduce-example", cmd_reproduce, False, "rerun the built-in two-mode example"),
    ):
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        if needs_config:
            p.add_argument("--config", required=True, metavar="PATH")
        if name in ("simulate", "estimate"):
            p.add_argument("--snap-to-grid", action="store_true", help="round tau0 down onto the dt grid")
        if name == "reproduce-example":
            p.add_argument("--full", action="store_true", help="also simulate case 2 (slow)")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must fit in 64 bits", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except GridMisaligned as exc:
        print(f"error: {exc} (use --snap-to-grid to round tau0 down)", file=sys.stderr)
        return EXIT_GRID
    except AllPathsBlewUp as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
