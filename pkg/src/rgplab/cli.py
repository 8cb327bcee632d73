"""Command-line runner: ``rgplab <subcommand> --config cfg.json [--seed S] [--out DIR]``.

Each subcommand writes one or more JSON reports plus ``summary_<subcommand>.csv``
(columns ``subcommand,section,name,index,value``) into the output directory.
Exit status: 0 on success, 1 on bad input, 2 when a verified inequality or
invariant fails.
"""

import argparse
import csv
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import jsonio
from .bounds import verify_bound_ladder
from .combinatorics import (
    Metric,
    dudley_integral,
    entropy_profile,
    growth_function,
    metric_ordering_check,
    restriction_count,
    sauer_bound,
    vc_covering_bound,
    vc_dimension_search,
)
from .complexity import empirical_structural_rademacher, structural_rademacher
from .config import ConfigError, build_classes, build_spec, load_config, suite_entries
from .hypotheses import erm_train, expected_risk, regret, stationary_risk
from .mixing import (
    ergodic_deviation_term,
    mixing_certificate,
    mixing_matrix_analytic,
    mixing_matrix_empirical,
    mixing_matrix_exact,
    reachable_sets,
    refined_deviation_term,
)
from .process import simulate_rgp
from .rng import derive_seed

SUBCOMMANDS = ("simulate", "rademacher", "combinatorics", "mixing", "verify", "erm", "report")
CSV_COLUMNS = ("subcommand", "section", "name", "index", "value")
PROFILE_LIMIT = 1024


class Run:
    """Collects report files and summary rows for one subcommand."""

    def __init__(self, cfg, seed):
        self.cfg, self.seed = cfg, seed
        self.digest = cfg.digest()
        self.files = {}
        self.rows = []
        self.violations = []

    def header(self, subcommand):
        return {"config_digest": self.digest, "seed": self.seed, "subcommand": subcommand}

    def row(self, section, name, index, value):
        self.rows.append((section, name, index, value))


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return "" if v is None else str(v)


def _csv_text(subcommand, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([subcommand] + [_fmt(v) for v in r])
    return buf.getvalue()


# -- subcommands -------------------------------------------------------------------------


def cmd_simulate(run: Run):
    spec = build_spec(run.cfg.process)
    sample = simulate_rgp(spec, run.seed)
    doc = {"config_digest": run.digest, **sample.to_dict()}
    run.files["sample.json"] = doc
    for t, (x, y) in enumerate(zip(sample.features, sample.labels), start=1):
        run.row("layer", "mean_feature", t, float(x.mean()))
        run.row("layer", "positive_fraction", t, float(np.mean(y > 0)))


def cmd_rademacher(run: Run):
    cfg, b = run.cfg, run.cfg.budgets
    spec = build_spec(cfg.process)
    classes = build_classes(cfg.classes, spec)
    sample = simulate_rgp(spec, derive_seed(run.seed, "sample"))
    emp = empirical_structural_rademacher(sample, classes, b.mc_draws, derive_seed(run.seed, "sigma"))
    st = structural_rademacher(spec, sample, classes, b.continuation_rollouts, b.mc_draws, derive_seed(run.seed, "sigma"))
    run.files["rademacher.json"] = {**run.header("rademacher"), "empirical": emp.to_dict(), "structural": st.to_dict()}
    for t, (e, s) in enumerate(zip(emp.per_timestamp, st.per_timestamp), start=1):
        run.row("empirical", "entry", t, e)
        run.row("structural", "entry", t, s)
    run.row("empirical", "one_norm", "", emp.one_norm)
    run.row("structural", "one_norm", "", st.one_norm)


def cmd_combinatorics(run: Run):
    cfg, b = run.cfg, run.cfg.budgets
    spec = build_spec(cfg.process)
    classes = build_classes(cfg.classes, spec)
    sample = simulate_rgp(spec, derive_seed(run.seed, "sample"))
    out = run.header("combinatorics")
    binary = all(c.is_binary for c in classes)
    sizes = list(spec.graph.sizes)
    if binary:
        counts = [restriction_count(sample, c, t) for t, c in enumerate(classes, start=1)]
        growth = growth_function(sample, classes)
        vc = [vc_dimension_search(c, cfg.combinatorics.grid) for c in classes]
        vc_used = [v["certified_upper"] if v["certified_upper"] is not None else None for v in vc]
        out["restriction_counts"] = counts
        out["growth_function"] = str(growth)
        out["vc_search"] = vc
        for t, c in enumerate(counts, start=1):
            run.row("growth", "restriction_count", t, c)
        run.row("growth", "growth_function", "", growth)
        if all(v is not None for v in vc_used):
            sb = sauer_bound(vc_used, sizes)
            out["sauer"] = sb.to_dict()
            out["sauer_holds"] = growth <= sb.binomial
            run.row("sauer", "binomial_bound", "", sb.binomial)
            run.row("sauer", "log_relaxation", "", sb.log_relaxation)
            if growth > sb.binomial:
                run.violations.append("growth function above the Sauer bound")
            envelopes = {}
            for eps in cfg.combinatorics.epsilons:
                env = [vc_covering_bound(vc_used, spec.horizon, eps, "independent")]
                if spec.regime == "uniform_ergodic":
                    gnorm = mixing_matrix_analytic(spec.horizon, spec.mixing_k0, spec.mixing_rho).norm2()
                    env.append(vc_covering_bound(vc_used, spec.horizon, eps, "ergodic", gnorm))
                envelopes[_fmt(float(eps))] = [e.to_dict() for e in env]
                for e in env:
                    run.row(f"covering_envelope_{e.regime}", "log_value", float(eps), e.log_value)
            out["covering_envelopes"] = envelopes
    if classes.product_size <= PROFILE_LIMIT:
        metric = Metric("empirical_L2", sample)
        prof = entropy_profile(classes, metric, exact_budget=b.exact_budget)
        dud = dudley_integral(prof, spec.horizon, min(sizes))
        emp = empirical_structural_rademacher(sample, classes, b.mc_draws, derive_seed(run.seed, "sigma"))
        out["entropy_profile"] = prof.to_dict()
        out["dudley"] = {**dud.to_dict(), "one_norm": emp.one_norm, "ratio": dud.ratio(emp.one_norm)}
        bad = prof.sandwich_violations() + prof.monotonicity_violations() + prof.bracket_violations()
        out["profile_violations"] = bad
        if bad:
            run.violations.append("covering/packing invariants failed")
        for i, (r, u) in enumerate(zip(prof.radii, prof.best_covering())):
            run.row("entropy_profile", "covering", i, u)
        run.row("dudley", "integral", "", dud.integral)
        run.row("dudley", "prefactor", "", dud.prefactor)
        run.row("dudley", "ratio", "", dud.ratio(emp.one_norm))
        if binary:
            linf = entropy_profile(classes, Metric("empirical_Linf", sample), radii=[1.0], exact_budget=0)
            out["linf_cover_at_1"] = linf.covering_upper[0]
            run.row("growth", "linf_cover_at_1", "", linf.covering_upper[0])
        order = metric_ordering_check(classes, sample, b.pairs, derive_seed(run.seed, "pairs"), b.exact_budget)
        out["metric_ordering"] = order
        run.row("metric_ordering", "violations", "", order["violations"])
        if order["violations"]:
            run.violations.append("metric ordering failed")
    run.files["combinatorics.json"] = out


def cmd_mixing(run: Run):
    cfg, b = run.cfg, run.cfg.budgets
    spec = build_spec(cfg.process)
    T, sizes = spec.horizon, spec.graph.sizes
    analytic = mixing_matrix_analytic(T, spec.mixing_k0, spec.mixing_rho, spec.regime)
    exact = mixing_matrix_exact(spec)
    emp = mixing_matrix_empirical(spec, b.histories, b.rollouts, derive_seed(run.seed, "gamma"))
    reach = reachable_sets(spec.graph)
    ergodic = ergodic_deviation_term(analytic, sizes)
    off = ergodic_deviation_term(analytic, sizes, off_diagonal=True)
    refined = refined_deviation_term(spec.graph, reach, spec.mixing_k0, spec.mixing_rho) if spec.regime == "uniform_ergodic" else 0.0
    envelope_ok = bool(np.all(emp.entries <= analytic.entries + 3.0 * emp.std_error + 1e-12))
    out = {
        **run.header("mixing"),
        "analytic": analytic.to_dict(),
        "exact": exact.to_dict(),
        "empirical": emp.to_dict(),
        "empirical_within_envelope": envelope_ok,
        "reachability": reach.to_dict(),
        "ergodic_deviation_term": ergodic,
        "ergodic_off_diagonal_term": off,
        "refined_deviation_term": refined,
    }
    if not envelope_ok:
        run.violations.append("empirical mixing matrix above the analytic envelope")
    t, gaps = cfg.mixing.t, cfg.mixing.gaps
    if spec.regime == "uniform_ergodic" and t + max(gaps) <= T:
        cert = mixing_certificate(spec, t, gaps, b.rollouts, derive_seed(run.seed, "certificate"), b.histories)
        out["certificate"] = cert
        for r in cert:
            run.row("certificate", "empirical_tv", r["gap"], r["empirical_tv"])
            run.row("certificate", "bound", r["gap"], r["bound"])
            if not r["holds"]:
                run.violations.append(f"mixing certificate failed at gap {r['gap']}")
    for i in range(T):
        for k in range(i + 1, T):
            run.row("gamma_empirical", f"{i + 1}-{k + 1}", "", float(emp.entries[i, k]))
    run.row("deviation", "ergodic", "", ergodic)
    run.row("deviation", "refined", "", refined)
    run.files["mixing.json"] = out


def cmd_verify(run: Run, threads: int):
    cfg, b = run.cfg, run.cfg.budgets
    seen = {}
    for th, spec, classes in suite_entries(cfg):
        seen[th] = seen.get(th, 0) + 1
        name = f"bound_{th}.json" if seen[th] == 1 else f"bound_{th}_{seen[th]}.json"
        reports = verify_bound_ladder(
            th, spec, classes, b.trials, cfg.deltas, derive_seed(run.seed, "verify", th, seen[th]),
            mc_draws=b.mc_draws, norm_samples=b.norm_samples, workers=threads,
        )
        run.files[name] = {**run.header("verify"), "theorem_id": th, "reports": [r.to_dict() for r in reports]}
        for r in reports:
            run.row(th, "violation_rate", r.delta, r.violation_rate)
            run.row(th, "binomial_slack", r.delta, r.binomial_slack)
            run.row(th, "holds", r.delta, r.holds)
            if not r.holds:
                run.violations.append(f"{th} at delta={r.delta}: violation rate {r.violation_rate}")


def cmd_erm(run: Run):
    cfg, b = run.cfg, run.cfg.budgets
    spec = build_spec(cfg.process)
    classes = build_classes(cfg.classes, spec)
    sample = simulate_rgp(spec, derive_seed(run.seed, "sample"))
    h, risk = erm_train(sample, classes)
    idx = [m.index for m in h]
    exact = stationary_risk(spec, h)
    mc = expected_risk(spec, h, b.risk_rollouts, derive_seed(run.seed, "risk"))
    reg = regret(spec, classes, idx)
    run.files["erm.json"] = {
        **run.header("erm"),
        "members": idx,
        "empirical_risk": risk.value,
        "expected_risk": exact.value,
        "expected_risk_mc": {"value": mc.value, "std_error": mc.mc_std_error, "rollouts": b.risk_rollouts},
        "regret": reg.value,
    }
    for t, i in enumerate(idx, start=1):
        run.row("erm", "member", t, i)
    run.row("erm", "empirical_risk", "", risk.value)
    run.row("erm", "expected_risk", "", exact.value)
    run.row("erm", "regret", "", reg.value)


def cmd_report(run: Run, out_dir: str):
    names = sorted(n for n in os.listdir(out_dir) if n.endswith(".json") and n != "report.json") if os.path.isdir(out_dir) else []
    if not names:
        raise ValueError(f"no reports found in {out_dir}")
    files = {}
    for n in names:
        with open(os.path.join(out_dir, n), "rb") as fh:
            raw = fh.read()
        doc = json.loads(raw)
        entry = {"sha256": hashlib.sha256(raw).hexdigest(), "config_digest": doc.get("config_digest"), "seed": doc.get("seed")}
        if doc.get("subcommand") == "verify":
            entry["reports"] = [
                {k: r[k] for k in ("delta", "violation_rate", "binomial_slack", "holds")} for r in doc["reports"]
            ]
            for r in doc["reports"]:
                run.row(doc["theorem_id"], "violation_rate", r["delta"], r["violation_rate"])
                if not r["holds"]:
                    run.violations.append(f"{n}: delta={r['delta']} fails")
        files[n] = entry
    run.files["report.json"] = {**run.header("report"), "files": files}
    run.row("report", "files", "", len(files))


# -- entry point --------------------------------------------------------------------------


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment JSON file (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="master seed; overrides the config")
    common.add_argument("--out", help="output directory; overrides the config")
    common.add_argument("--threads", type=int, default=1, help="worker threads for verification trials")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="format of the summary printed to stdout")
    p = argparse.ArgumentParser(prog="rgplab", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def run(config_path, subcommand, seed=None, out=None, threads=1, fmt="json", stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    try:
        cfg = load_config(config_path)
    except ConfigError as e:
        print(f"error: {config_path}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 1
    if seed is not None:
        if seed < 0 or seed >= 2**64:
            print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return 1
        cfg.seed = seed
    if threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 1
    out_dir = out or cfg.output_dir
    r = Run(cfg, cfg.seed)
    try:
        if subcommand == "verify":
            cmd_verify(r, threads)
        elif subcommand == "report":
            cmd_report(r, out_dir)
        else:
            globals()[f"cmd_{subcommand}"](r)
    except (ValueError, TypeError) as e:
        print(f"error: {subcommand}: {e}", file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    for name, payload in r.files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(jsonio.dumps(payload))
    csv_text = _csv_text(subcommand, r.rows)
    with open(os.path.join(out_dir, f"summary_{subcommand}.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    if fmt == "csv":
        stdout.write(csv_text)
    else:
        rows = [dict(zip(CSV_COLUMNS, [subcommand] + list(row))) for row in r.rows]
        stdout.write(jsonio.dumps({"files": sorted(r.files), "violations": r.violations, "summary": rows}))
    for v in r.violations:
        print(f"violation: {v}", file=sys.stderr)
    return 2 if r.violations else 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return run(args.config, args.subcommand, args.seed, args.out, args.threads, args.format)


if __name__ == "__main__":
    raise SystemExit(main())
