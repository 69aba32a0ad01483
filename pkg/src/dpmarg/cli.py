"""Command-line front end: generate / release / compress / answer / evaluate /
boost / width subcommands, JSON outputs embedding the resolved configuration.

Exit codes: 0 success, 2 validation or usage error, 3 runtime error.
"""

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import geometry, io as dio, sdp as sdp_mod
from .boosting import BoostConfig, boost, paper_params
from .errors import DpmargError, ValidationError
from .noise import PrivacyLedger, PrivacyParams, make_rng
from .projection import (
    raw_point_from_dict,
    raw_point_to_dict,
    relaxed_projection_mechanism,
    root_mse,
    worst_case_error,
    mse,
)
from .queries import (
    MarginalQuery,
    QueryDistribution,
    RowDatabase,
    all_subset_tuples,
    barak_coefficients,
    canonical_tuple,
    marginals_from_parities,
    true_marginal_answers,
    true_parity_answers,
    uniform_grid_distribution,
)
from .synopsis import jl_compress, load_synopsis, reconstruct_answer, save_synopsis, synopsis_size_bits


def _out_path(arg, default_name):
    if arg:
        return Path(arg)
    base = os.environ.get("DPMARG_OUTPUT_DIR", ".")
    return Path(base) / default_name


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return path


def _parse_query(text):
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(","))
    except ValueError as exc:
        raise ValidationError(f"bad query tuple {text!r}: {exc}") from exc


# generate ---------------------------------------------------------------------

def cmd_generate(args):
    if args.n < 0:
        raise ValidationError("n must be >= 0")
    if args.d < 1:
        raise ValidationError("d must be >= 1")
    rng = make_rng(args.seed)
    if args.n == 0:
        rows = np.zeros((0, args.d), dtype=np.int8)
    elif args.planted is not None:
        rho = args.planted
        if not 0 <= rho <= 1:
            raise ValidationError("--planted must lie in [0, 1]")
        rows = np.empty((args.n, args.d), dtype=np.int8)
        rows[:, 0] = rng.choice((-1, 1), size=args.n)
        flip_p = (1.0 - rho) / 2.0
        for j in range(1, args.d):
            flips = np.where(rng.random(args.n) < flip_p, -1, 1)
            rows[:, j] = rows[:, j - 1] * flips
    else:
        rows = rng.choice(np.array([-1, 1], dtype=np.int8), size=(args.n, args.d))
    db = RowDatabase(rows)
    out = _out_path(args.out, "database.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    dio.save_database_csv(db, out)
    print(f"wrote {out} ({db.n} rows, {db.d} attributes)")
    return 0


# release ----------------------------------------------------------------------

def _resolve_distribution(args, d):
    if args.distribution:
        spec = args.distribution
        if spec == "uniform_k_subsets":
            spec = {"type": "uniform_k_subsets", "k": args.k}
        marg, parity = dio.load_distribution_json(spec, d)
        return marg, parity, str(args.distribution)
    if args.parity_grid:
        return None, uniform_grid_distribution(d, args.k), "uniform_parity_grid"
    marg, parity = dio.load_distribution_json({"type": "uniform_k_subsets", "k": args.k}, d)
    return marg, parity, "uniform_k_subsets"


def cmd_release(args):
    pp = PrivacyParams(args.epsilon, args.delta)
    if args.k < 1:
        raise ValidationError("k must be >= 1")
    db = dio.load_database_csv(args.input, zero_one=args.zero_one)
    if args.k > db.d:
        raise ValidationError(f"k={args.k} exceeds d={db.d}")
    marg, parity_dist, dist_label = _resolve_distribution(args, db.d)
    rng = make_rng(args.seed)
    ledger = PrivacyLedger()
    result = relaxed_projection_mechanism(
        db,
        parity_dist,
        pp,
        T=args.T,
        rng=rng,
        noise_multiplier=0.0 if args.noise_off else None,
        oracle_kind=args.oracle,
        ledger=ledger,
        width_estimate_T=args.width_estimate,
    )
    payload = {
        "answers": [{"tuple": list(q), "value": v} for q, v in sorted(result.answers.items())],
        "weights": [
            {"tuple": list(q), "weight": parity_dist.weights[q]} for q in parity_dist.support
        ],
        "metadata": {**result.metadata, "seed": args.seed, "distribution": dist_label},
        "ledger": ledger.to_dict(),
        "config": {
            "input": str(args.input),
            "k": args.k,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "T": args.T,
            "seed": args.seed,
            "noise_off": args.noise_off,
            "oracle": args.oracle,
            "distribution": dist_label,
        },
    }
    if marg is not None:
        recon = []
        estimates = {q: v for q, v in result.answers.items()}
        for mq in sorted(marg, key=lambda q: (q.S, q.beta)):
            by_subset = {}
            ok = True
            for T_sub in barak_coefficients(mq):
                key = canonical_tuple(T_sub, args.k)
                if key not in estimates:
                    ok = False
                    break
                by_subset[T_sub] = estimates[key]
            if not ok:
                raise ValidationError(
                    f"released support does not cover the subsets of {mq.S}; "
                    "use a lifted marginal distribution"
                )
            recon.append(
                {
                    "S": list(mq.S),
                    "beta": list(mq.beta),
                    "weight": marg[mq],
                    "value": marginals_from_parities(by_subset, mq),
                }
            )
        payload["marginal_answers"] = recon
    if args.include_raw_point or args.synopsis_out:
        raw_dict = raw_point_to_dict(result.raw_point)
        if args.include_raw_point:
            payload["raw_point"] = raw_dict
    out = _write_json(_out_path(args.out, "release.json"), payload)
    print(f"wrote {out}")
    if args.synopsis_out:
        syn = jl_compress(result.raw_point, args.chi, args.beta, rng)
        save_synopsis(syn, args.synopsis_out)
        print(f"wrote {args.synopsis_out} ({synopsis_size_bits(syn)} bits)")
    return 0


# compress / answer --------------------------------------------------------------

def cmd_compress(args):
    with open(args.release) as fh:
        release = json.load(fh)
    if "raw_point" not in release:
        raise ValidationError(
            f"{args.release} has no raw_point; rerun release with --include-raw-point"
        )
    raw = raw_point_from_dict(release["raw_point"])
    rng = make_rng(args.seed)
    syn = jl_compress(raw, args.chi, args.beta, rng)
    out = _out_path(args.out, "synopsis.dpsyn")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_synopsis(syn, out)
    print(f"wrote {out} ({synopsis_size_bits(syn)} bits, M'={syn.m_prime}, "
          f"identity_shortcut={syn.header.get('identity_shortcut')})")
    return 0


def cmd_answer(args):
    syn = load_synopsis(args.synopsis)
    if args.query:
        queries = [_parse_query(q) for q in args.query]
    elif args.all_subsets:
        queries = all_subset_tuples(syn.d, syn.k)
    else:
        raise ValidationError("provide --query (repeatable) or --all-subsets")
    answers = [{"tuple": list(q), "value": reconstruct_answer(syn, q)} for q in queries]
    payload = {
        "answers": answers,
        "synopsis": {
            "d": syn.d,
            "k": syn.k,
            "n": syn.n,
            "m_prime": syn.m_prime,
            "bits": synopsis_size_bits(syn),
        },
        "config": {"synopsis": str(args.synopsis)},
    }
    if args.out:
        out = _write_json(args.out, payload)
        print(f"wrote {out}")
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


# evaluate -----------------------------------------------------------------------

def _error_histogram(errors, bins=10):
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        return []
    hi = max(float(errors.max()), 1e-12)
    counts, edges = np.histogram(errors, bins=bins, range=(0.0, hi))
    return [
        {"lo": float(edges[i]), "hi": float(edges[i + 1]), "count": int(counts[i])}
        for i in range(len(counts))
    ]


def cmd_evaluate(args):
    with open(args.answers) as fh:
        released = json.load(fh)
    db = dio.load_database_csv(args.input, zero_one=args.zero_one)
    answers = {tuple(a["tuple"]): float(a["value"]) for a in released["answers"]}
    if not answers:
        raise ValidationError("answers file contains no answers")
    k = len(next(iter(answers)))
    support = sorted(answers)
    y_true = true_parity_answers(db, support)
    y_hat = np.array([answers[q] for q in support])
    weights = released.get("weights")
    if weights:
        p = QueryDistribution({tuple(w["tuple"]): w["weight"] for w in weights}, k)
    else:
        p = QueryDistribution({q: 1.0 / len(support) for q in support}, k)
    errors = np.abs(y_hat - y_true)
    payload = {
        "parity_metrics": {
            "mse": mse(p, y_true, y_hat),
            "root_mse": root_mse(p, y_true, y_hat),
            "worst_case_error": worst_case_error(y_true, y_hat),
            "histogram": _error_histogram(errors),
            "queries": len(support),
        },
        "config": {"answers": str(args.answers), "input": str(args.input)},
    }
    if "marginal_answers" in released:
        ents = released["marginal_answers"]
        mqs = [MarginalQuery(tuple(e["S"]), tuple(e["beta"])) for e in ents]
        truth = true_marginal_answers(db, mqs)
        vals = np.array([float(e["value"]) for e in ents])
        w = np.array([float(e.get("weight", 1.0)) for e in ents])
        w = w / w.sum()
        errs = np.abs(vals - truth)
        payload["marginal_metrics"] = {
            "mse": float(np.sum(w * errs**2)),
            "root_mse": float(np.sqrt(np.sum(w * errs**2))),
            "worst_case_error": float(errs.max()),
            "histogram": _error_histogram(errs),
            "queries": len(ents),
        }
    out = _write_json(_out_path(args.out, "metrics.json"), payload)
    print(f"wrote {out}")
    return 0


# boost ---------------------------------------------------------------------------

def cmd_boost(args):
    db = dio.load_database_csv(args.input, zero_one=args.zero_one)
    if not 1 <= args.k <= db.d:
        raise ValidationError(f"k={args.k} invalid for d={db.d}")
    rng = make_rng(args.seed)
    if args.paper_params:
        cfg = paper_params(db, args.k, args.epsilon0 * (args.rounds or 1), args.delta0 * (args.rounds or 1))
    else:
        if args.rounds is None or args.kappa is None:
            raise ValidationError("provide --rounds and --kappa (or --paper-params)")
        cfg = BoostConfig(
            rounds=args.rounds,
            kappa=args.kappa,
            epsilon0=args.epsilon0,
            delta0=args.delta0,
            chi=args.chi,
            beta=args.beta,
            lam=getattr(args, "lambda"),
            eta=args.eta,
            fw_iterations=args.fw_iterations,
            noise_multiplier=0.0 if args.noise_off else None,
        )
    queries = all_subset_tuples(db.d, args.k)
    result = boost(db, queries, cfg, rng)
    per_round = [
        {"round": i, "bits": synopsis_size_bits(s)} for i, s in enumerate(result.per_round_synopses)
    ]
    payload = {
        "answers": [{"tuple": list(q), "value": v} for q, v in sorted(result.answers.items())],
        "lambda": result.lam,
        "kappa_recommended": result.kappa_recommended,
        "worst_case_error": result.worst_case_error,
        "ledger": result.ledger.to_dict(),
        "per_round": per_round,
        "metadata": result.metadata,
        "config": {
            "input": str(args.input),
            "k": args.k,
            "rounds": cfg.rounds,
            "kappa": cfg.kappa,
            "epsilon0": cfg.epsilon0,
            "delta0": cfg.delta0,
            "chi": cfg.chi,
            "beta": cfg.beta,
            "eta": cfg.eta,
            "seed": args.seed,
            "noise_off": args.noise_off,
        },
    }
    out = _write_json(_out_path(args.out, "boost.json"), payload)
    print(f"wrote {out}")
    return 0


# width -----------------------------------------------------------------------------

def cmd_width(args):
    if not 1 <= args.k <= args.d:
        raise ValidationError(f"k={args.k} invalid for d={args.d}")
    rng = make_rng(args.seed)
    if args.tuple_set == "subsets":
        tuples = all_subset_tuples(args.d, args.k)
    else:
        from itertools import product as iproduct

        tuples = [t for t in iproduct(range(1, args.d + 1), repeat=args.k)]
    m = len(tuples)
    if args.direction == "gaussian":
        sampler = geometry.gaussian_direction_sampler(tuples, rng)
        dist_label = "gaussian"
    else:
        p_param = args.p_param
        if p_param is None:
            if args.clauses is None:
                raise ValidationError("dp direction needs --p-param or --clauses")
            p_param = min(1.0, args.clauses / m)
        sampler = geometry.dp_direction_sampler(tuples, p_param, rng)
        dist_label = f"dp(p={p_param:g})"
    stats = {}
    settings = sdp_mod.SdpSettings(restarts=args.restarts)

    def norm_K(w):
        return geometry.dual_norm_K_bruteforce(w, args.d, args.k)

    def norm_L(w):
        return geometry.dual_norm_L(w, args.d, args.k, settings=settings, rng=rng, stats=stats)

    def norm_L0(w):
        return geometry.dual_norm_L0_bruteforce(w, args.d, args.k)

    def norm_ball(w):
        return float(np.linalg.norm(np.array(list(w.values()))))

    rows = []
    if args.body == "KL":
        vals_K, vals_L = [], []
        for _ in range(args.samples):
            w = sampler()
            vals_K.append(norm_K(w))
            vals_L.append(norm_L(w))
        vals_K = np.array(vals_K)
        vals_L = np.array(vals_L)
        gap = vals_L - vals_K
        for label, vals in (("K", vals_K), ("L", vals_L)):
            rows.append(
                {
                    "body": label,
                    "distribution": dist_label,
                    "mean": float(vals.mean()),
                    "stderr": float(vals.std(ddof=1) / np.sqrt(args.samples)),
                    "samples": args.samples,
                }
            )
        rows.append(
            {
                "body": "L-K gap",
                "distribution": dist_label,
                "mean": float(gap.mean()),
                "stderr": float(gap.std(ddof=1) / np.sqrt(args.samples)),
                "samples": args.samples,
                "containment_violations": int(np.sum(gap < -1e-6)),
                "mean_ratio": float(np.mean(vals_L / np.maximum(vals_K, 1e-12))),
            }
        )
    else:
        fn = {"K": norm_K, "L": norm_L, "L0": norm_L0, "ball": norm_ball}[args.body]
        est = geometry.estimate_width(
            sampler, fn, args.samples, body=args.body, distribution=dist_label
        )
        rows.append(
            {
                "body": est.body,
                "distribution": est.distribution,
                "mean": est.mean,
                "stderr": est.stderr,
                "samples": est.samples,
            }
        )
    payload = {
        "table": rows,
        "solver_stats": stats,
        "config": {
            "d": args.d,
            "k": args.k,
            "body": args.body,
            "direction": dist_label,
            "tuple_set": args.tuple_set,
            "samples": args.samples,
            "seed": args.seed,
            "tuples": m,
        },
    }
    out = _write_json(_out_path(args.out, "width.json"), payload)
    print(f"wrote {out}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["body", "distribution", "mean", "stderr", "samples"], extrasaction="ignore"
            )
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.csv}")
    return 0


# parser ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="dpmarg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic +-1 database CSV")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--planted", type=float, default=None,
                   help="adjacent-attribute correlation in [0,1] for visible structure")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("release", help="noise-then-project parity release")
    r.add_argument("--input", required=True)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--epsilon", type=float, required=True)
    r.add_argument("--delta", type=float, required=True)
    r.add_argument("--distribution", help="JSON file path or 'uniform_k_subsets'")
    r.add_argument("--parity-grid", action="store_true",
                   help="use the uniform distribution over all d^k parity tuples")
    r.add_argument("--T", type=int, default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--noise-off", action="store_true", help="test mode, not private")
    r.add_argument("--oracle", choices=("sdp", "exact"), default="sdp")
    r.add_argument("--zero-one", action="store_true")
    r.add_argument("--width-estimate", action="store_true",
                   help="pick T from a Monte Carlo width estimate instead of the analytic bound")
    r.add_argument("--include-raw-point", action="store_true")
    r.add_argument("--synopsis-out")
    r.add_argument("--chi", type=float, default=2.0)
    r.add_argument("--beta", type=float, default=0.1)
    r.add_argument("--out")
    r.set_defaults(func=cmd_release)

    c = sub.add_parser("compress", help="JL-compress a release's raw point")
    c.add_argument("--release", required=True)
    c.add_argument("--chi", type=float, default=2.0)
    c.add_argument("--beta", type=float, default=0.1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compress)

    a = sub.add_parser("answer", help="answer queries from a synopsis file")
    a.add_argument("--synopsis", required=True)
    a.add_argument("--query", action="append", help="comma-separated tuple, repeatable")
    a.add_argument("--all-subsets", action="store_true")
    a.add_argument("--out")
    a.set_defaults(func=cmd_answer)

    e = sub.add_parser("evaluate", help="error metrics of released answers")
    e.add_argument("--answers", required=True)
    e.add_argument("--input", required=True)
    e.add_argument("--zero-one", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("boost", help="worst-case answers by boosted synopses")
    b.add_argument("--input", required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--rounds", type=int, default=None)
    b.add_argument("--kappa", type=int, default=None)
    b.add_argument("--epsilon0", type=float, required=True)
    b.add_argument("--delta0", type=float, required=True)
    b.add_argument("--lambda", type=float, default=None, dest="lambda")
    b.add_argument("--eta", type=float, default=0.5)
    b.add_argument("--chi", type=float, default=1.0)
    b.add_argument("--beta", type=float, default=0.05)
    b.add_argument("--fw-iterations", type=int, default=None)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--noise-off", action="store_true")
    b.add_argument("--zero-one", action="store_true")
    b.add_argument("--paper-params", action="store_true")
    b.add_argument("--out")
    b.set_defaults(func=cmd_boost)

    w = sub.add_parser("width", help="Monte Carlo width table")
    w.add_argument("--d", type=int, required=True)
    w.add_argument("--k", type=int, required=True)
    w.add_argument("--body", choices=("K", "L", "L0", "ball", "KL"), default="K")
    w.add_argument("--direction", choices=("gaussian", "dp"), default="gaussian")
    w.add_argument("--p-param", type=float, default=None)
    w.add_argument("--clauses", type=float, default=None,
                   help="expected clause budget; sets p = clauses / #tuples")
    w.add_argument("--tuple-set", choices=("subsets", "grid"), default="subsets")
    w.add_argument("--samples", type=int, default=100)
    w.add_argument("--restarts", type=int, default=20)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--csv")
    w.add_argument("--out")
    w.set_defaults(func=cmd_width)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DpmargError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
