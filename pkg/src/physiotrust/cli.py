"""Command-line entry point: ``physiotrust <command> [options]``.

Exit status is 0 on success, 1 on a domain or I/O error and 2 on a usage error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset, explain, stats, synth
from .config import dump_config, load_config, make_config, parse_set_items
from .errors import PhysioTrustError, InsufficientMajority, ParseError
from .models import (BASELINE_KINDS, Hyperparameters, TreeEnsemble, baseline_trainer, compute_metrics,
                     gbdt_trainer, kfold_cv, mean_metrics, nested_cv, random_search, train_gbdt)

RESAMPLE_MULTIPLIERS = (1, 2, 3, "max")


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _clean(x):
    """JSON-safe copy: NaN becomes null, numpy scalars become Python numbers."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return None if np.isnan(x) else float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def echo_path(out):
    out = Path(out)
    if out.suffix:
        return out.with_name(out.stem + ".config.json")
    return out / "effective_config.json"


def effective_config(args):
    overrides = {}
    cfg = load_config(args.config) if args.config else make_config()
    overrides.update(cfg)
    overrides.update(parse_set_items(args.set))
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.threads is not None:
        overrides["run.threads"] = args.threads
    if args.exclude_fa:
        overrides["run.exclude_fa"] = True
    if args.nested_cv:
        overrides["run.nested_cv"] = True
    if args.window_s is not None:
        overrides["window.width_s"] = args.window_s
    return make_config(overrides)


def _load_matrix(path, cfg):
    m = dataset.read_matrix(path)
    if cfg["run.exclude_fa"]:
        m = dataset.filter_condition(m, ("fa",))
    return m


def _names():
    return list(dataset.FEATURE_NAMES)


def _hyper(cfg):
    return Hyperparameters.from_config(cfg)


# ---------------------------------------------------------------- commands

def cmd_simulate(args, cfg):
    out = Path(args.out)
    cohort = synth.generate_cohort(synth.CohortConfig.from_config(cfg), seed=cfg["run.seed"])
    dirs = synth.write_cohort(cohort, out)
    dump_config(cfg, echo_path(out))
    return f"wrote {len(dirs)} sessions to {out}"


def cmd_features(args, cfg):
    paths = dataset.find_sessions(args.input)
    if not paths:
        raise ParseError(f"no session directories (manifest.json) under {args.input}")
    sessions = [dataset.read_session(p) for p in paths]
    if cfg["run.exclude_fa"]:
        sessions = [s for s in sessions if s.condition != "fa"]
    m = dataset.assemble_matrix(sessions, cfg)
    dataset.write_matrix(m, args.out)
    dump_config(cfg, echo_path(args.out))
    return f"wrote {len(m)} rows to {args.out}"


def cmd_train(args, cfg):
    m = _load_matrix(args.features, cfg)
    hyper = _hyper(cfg)
    trace = None
    if cfg["run.search_iter"] > 0:
        res = random_search(m.X, m.label, n_iter=cfg["run.search_iter"], seed=cfg["run.seed"],
                            folds=cfg["run.search_folds"], feature_names=_names(), base=hyper,
                            threads=cfg["run.threads"])
        hyper = res.best
        trace = res.to_dict()
    ens = train_gbdt(m.X, m.label, hyper, seed=cfg["run.seed"], feature_names=_names())
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    ens.save(args.out)
    if trace is not None:
        _write_json(Path(args.out).with_name(Path(args.out).stem + ".search.json"), _clean(trace))
    dump_config(cfg, echo_path(args.out))
    return f"trained {len(ens.trees)} trees on {len(m)} rows -> {args.out}"


def _cv_block(reports):
    return {"folds": [r.to_dict() for r in reports], "mean": mean_metrics(reports)}


def cmd_evaluate(args, cfg):
    m = _load_matrix(args.features, cfg)
    seed, folds, threads = cfg["run.seed"], cfg["run.folds"], cfg["run.threads"]
    report = {"rows": len(m), "class_counts": {str(k): v for k, v in m.class_counts().items()}}
    hyper = _hyper(cfg)
    if args.model:
        ens = TreeEnsemble.load(args.model)
        if ens.hyperparameters is not None:
            hyper = ens.hyperparameters
        proba = ens.predict_proba(m.X)
        report["model_on_input"] = compute_metrics(m.label, scores=proba).to_dict()
    if cfg["run.nested_cv"]:
        n_iter = cfg["run.search_iter"] or 50
        reports, searches = nested_cv(m.X, m.label, folds, n_iter=n_iter, seed=seed,
                                      inner_folds=cfg["run.search_folds"], feature_names=_names(),
                                      threads=threads)
        report["mode"] = "nested"
        report["gbdt"] = _cv_block(reports)
        report["gbdt"]["selected_hyperparameters"] = [s.best.to_dict() for s in searches]
    else:
        reports = kfold_cv(m.X, m.label, folds, gbdt_trainer(hyper, _names()), seed, threads)
        report["mode"] = "cv"
        report["gbdt"] = _cv_block(reports)
        report["gbdt"]["hyperparameters"] = hyper.to_dict()
    if args.baselines:
        report["baselines"] = {
            kind: _cv_block(kfold_cv(m.X, m.label, folds, baseline_trainer(kind), seed, threads))
            for kind in BASELINE_KINDS
        }
    _write_json(args.out, _clean(report))
    dump_config(cfg, echo_path(args.out))
    mean = report["gbdt"]["mean"]
    return "  ".join(f"{k}={mean[k]:.3f}" for k in ("accuracy", "precision", "recall", "f1", "roc_auc"))


def cmd_explain(args, cfg):
    m = _load_matrix(args.features, cfg)
    ens = TreeEnsemble.load(args.model)
    phi, phi0, margin = explain.shap_matrix(ens, m.X)
    lines = [",".join(["row", "participant_id", "label_time", "phi0"] + [f"phi_{n}" for n in ens.feature_names]
                      + ["margin", "missing"])]
    for i in range(len(m)):
        missing = ";".join(ens.feature_names[j] for j in np.flatnonzero(np.isnan(m.X[i])))
        lines.append(",".join([str(i), str(m.participant_id[i]), repr(float(m.label_time[i])), repr(float(phi0[i]))]
                              + [repr(float(v)) for v in phi[i]] + [repr(float(margin[i])), missing]))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    scores = np.mean(np.abs(phi), axis=0)
    order = np.argsort(-scores, kind="stable")
    ranking = explain.ImportanceRanking(tuple(ens.feature_names[i] for i in order),
                                        tuple(float(scores[i]) for i in order))
    _write_json(Path(args.out).with_name(Path(args.out).stem + ".ranking.json"),
                _clean(ranking.to_dict(dataset.REPORTED_NAMES)))
    dump_config(cfg, echo_path(args.out))
    return "top features: " + ", ".join(ranking.features[:5])


def cmd_select(args, cfg):
    m = _load_matrix(args.features, cfg)
    seed = cfg["run.seed"]
    hyper = _hyper(cfg)
    if args.model:
        ens = TreeEnsemble.load(args.model)
        hyper = ens.hyperparameters or hyper
    else:
        ens = train_gbdt(m.X, m.label, hyper, seed=seed, feature_names=_names())
    ranking = explain.importance_ranking(ens, m.X)

    def trainer(X, y, s, names):
        return train_gbdt(X, y, hyper, seed=s, feature_names=names)

    result = explain.incremental_selection(m.X, m.label, _names(), ranking, trainer, seed=seed,
                                           folds=cfg["run.folds"], threads=cfg["run.threads"])
    out = result.to_dict()
    out["ranking"] = ranking.to_dict(dataset.REPORTED_NAMES)["ranking"]
    out["selected_reported_names"] = [dataset.REPORTED_NAMES.get(f) for f in result.selected]
    _write_json(args.out, _clean(out))
    dump_config(cfg, echo_path(args.out))
    return "selected: " + ", ".join(result.selected)


def _read_ratings(path):
    """(participant_id, condition, rating) triples from features.csv or a plain ratings CSV."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    first = next((ln for ln in text.split("\n") if not ln.startswith("#")), "")
    if first.split(",")[:3] == ["participant_id", "condition", "rating"]:
        out = []
        for k, raw in enumerate(text.split("\n")[1:], start=2):
            if not raw:
                continue
            f = raw.split(",")
            if len(f) != 3:
                raise ParseError(f"expected 3 fields, found {len(f)}", k, min(len(f), 3) + 1, path)
            try:
                out.append((f[0], f[1], float(f[2])))
            except ValueError:
                raise ParseError(f"rating {f[2]!r} is not a number", k, 3, path)
        return out
    m = dataset.read_matrix(path)
    return list(zip(m.participant_id, m.condition, m.rating.astype(float)))


def cmd_anova(args, cfg):
    triples = _read_ratings(args.ratings)
    per = {}
    for pid, cond, r in triples:
        per.setdefault((cond, pid), []).append(r)
    conds = [c for c in ("control", "fa", "miss") if any(k[0] == c for k in per)]
    if cfg["run.exclude_fa"] and "fa" in conds:
        conds.remove("fa")
    groups = [[float(np.mean(v)) for (c, _), v in sorted(per.items()) if c == cond] for cond in conds]
    res = stats.one_way_anova(groups)
    tk = stats.tukey_hsd(groups, alpha=args.alpha, seed=cfg["run.seed"])
    report = res.to_dict()
    report["conditions"] = conds
    report["unit"] = "participant mean rating"
    report["tukey"] = [
        {**p.to_dict(), "pair": [conds[p.pair[0]], conds[p.pair[1]]]} for p in tk.pairs
    ]
    report["tukey_draws"] = tk.draws
    _write_json(args.out, _clean(report))
    dump_config(cfg, echo_path(args.out))
    return f"F({res.df_between},{res.df_within}) = {res.F:.3f}, p = {res.p:.3g}"


def cmd_resample_study(args, cfg):
    m = _load_matrix(args.features, cfg)
    seed, folds, threads = cfg["run.seed"], cfg["run.folds"], cfg["run.threads"]
    trainer = gbdt_trainer(_hyper(cfg), _names())
    counts = m.class_counts()
    minority = 0 if counts[0] <= counts[1] else 1
    rows = []
    for mult in RESAMPLE_MULTIPLIERS:
        row = {"multiplier": mult}
        try:
            sub = m if mult == "max" else dataset.resample_majority(m, mult, seed)
        except InsufficientMajority as exc:
            row.update({"status": "insufficient_majority", "detail": str(exc)})
            rows.append(row)
            continue
        c = sub.class_counts()
        row.update({"status": "ok", "majority_count": c[1 - minority], "minority_count": c[minority],
                    "trust_count": c[1], "distrust_count": c[0]})
        row.update(mean_metrics(kfold_cv(sub.X, sub.label, folds, trainer, seed, threads)))
        rows.append(row)
    _write_json(args.out, _clean({"rows": rows, "seed": seed, "folds": folds}))
    dump_config(cfg, echo_path(args.out))
    return "\n".join(
        f"{r['multiplier']}: " + (f"trust={r['trust_count']} distrust={r['distrust_count']} f1={r['f1']:.3f}"
                                  if r["status"] == "ok" else r["status"])
        for r in rows)


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run options")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--threads", type=int, help="worker cap for cross-validation folds")
    g.add_argument("--config", help="JSON file of dotted config keys")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    g.add_argument("--exclude-fa", action="store_true", help="drop false-alarm condition rows")
    g.add_argument("--nested-cv", action="store_true", help="tune hyperparameters inside each outer fold")
    g.add_argument("--window-s", type=float, help="window width in seconds (default 25)")

    p = argparse.ArgumentParser(prog="physiotrust", description="Physiological trust classification pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic cohort")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("features", parents=[common], help="extract the 17-feature matrix")
    s.add_argument("--in", dest="input", required=True, help="session directory or a tree of them")
    s.add_argument("--out", required=True, help="features.csv path")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("train", parents=[common], help="fit the boosted tree model")
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True, help="model JSON path")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="cross-validated metrics")
    s.add_argument("--features", required=True)
    s.add_argument("--model", help="model whose hyperparameters are evaluated")
    s.add_argument("--out", required=True, help="report JSON path")
    s.add_argument("--baselines", action="store_true", help="also evaluate LR, DT, NB and KNN")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("explain", parents=[common], help="per-row Shapley attributions")
    s.add_argument("--features", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True, help="attribution CSV path")
    s.set_defaults(func=cmd_explain)

    s = sub.add_parser("select", parents=[common], help="importance-ordered forward feature selection")
    s.add_argument("--features", required=True)
    s.add_argument("--model", help="model used for the importance ranking (trained if omitted)")
    s.add_argument("--out", required=True, help="trace JSON path")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("anova", parents=[common], help="condition comparison on participant mean ratings")
    s.add_argument("--ratings", required=True, help="features.csv or participant_id,condition,rating CSV")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--out", required=True, help="report JSON path")
    s.set_defaults(func=cmd_anova)

    s = sub.add_parser("resample-study", parents=[common], help="majority-subsampling trials")
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True, help="report JSON path")
    s.set_defaults(func=cmd_resample_study)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        msg = args.func(args, cfg)
    except PhysioTrustError as exc:
        print(f"physiotrust {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"physiotrust {args.command}: I/O error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # invalid values that passed parsing, e.g. a negative learning rate
        print(f"physiotrust {args.command}: invalid input: {exc}", file=sys.stderr)
        return 1
    if msg:
        print(msg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
