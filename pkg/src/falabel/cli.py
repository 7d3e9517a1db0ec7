"""Command-line surface for the label-model pipeline.

Subcommands: fit, predict, evaluate, compare, sweep, stats, cov, synth,
apply-lfs.  Exit codes: 0 success, 2 input/validation error, 3 numerical
failure.  All randomness is driven by --seed, so every subcommand is
bit-reproducible given identical inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .ci_baseline import (
    ci_params_from_dict,
    ci_posterior,
    fit_ci_em,
    majority_vote,
    save_ci_params,
)
from .errors import NumericalError, ValidationError
from .fa_core import FitConfig, FitReport, fit_fa_em, fit_fa_vi
from .label_model import (
    Predictions,
    build_label_model,
    label_model_from_dict,
    predict,
    save_label_model,
    save_predictions,
    train_label_model,
)
from .labelling import (
    apply_lfs,
    covariance_matrix,
    load_gold_labels,
    load_label_matrix,
    load_lf_specs,
    matrix_stats,
    save_gold_labels,
    save_label_matrix,
)
from .metrics_eval import evaluate, robustness_sweep
from .synthetic import SyntheticSpec, generate, load_spec

FA_ROUTES = ("fa-em", "fa-vi")
ALL_ROUTES = ("fa-em", "fa-vi", "ci-em", "majority")
THRESHOLD_FLAGS = {"median": "median", "mean": "mean", "cdf-youden": "cdf_youden"}


def _report_payload(report: FitReport) -> dict:
    return {
        "iterations": report.iterations,
        "final_log_likelihood": report.final_log_likelihood,
        "ll_trace": list(report.ll_trace),
        "converged": report.converged,
        "route": report.route,
    }


def _write_json(payload: dict, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _fit_config(args) -> FitConfig:
    return FitConfig(
        k=args.k,
        max_iter=args.max_iter,
        tol=args.tol,
        seed=args.seed,
        init=args.init,
    )


def _parse_per_lf(text: str, m: int, what: str) -> tuple[float, ...]:
    """Per-LF value spec: a single float, a comma list, or a 'lo:hi' range
    expanded with linspace."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi = (float(p) for p in text.split(":", 1))
            return tuple(float(v) for v in np.linspace(lo, hi, m))
        if "," in text:
            values = tuple(float(p) for p in text.split(","))
            if len(values) != m:
                raise ValidationError(f"{what}: expected {m} values, got {len(values)}")
            return values
        return (float(text),) * m
    except ValueError:
        raise ValidationError(f"{what}: cannot parse {text!r}") from None


def _load_model_file(path):
    """Return ('fa', LabelModel) or ('ci', CIParams) based on the JSON keys."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if "threshold_kind" in payload:
        return "fa", label_model_from_dict(payload)
    if "emissions" in payload:
        return "ci", ci_params_from_dict(payload)
    raise ValidationError(f"{path}: not a label-model or CI-model file")


def _dev_split(args):
    if args.dev_matrix is None and args.dev_gold is None:
        return None
    if args.dev_matrix is None or args.dev_gold is None:
        raise ValidationError("--dev-matrix and --dev-gold must be given together")
    return load_label_matrix(args.dev_matrix), load_gold_labels(args.dev_gold)


def cmd_fit(args) -> int:
    matrix = load_label_matrix(args.matrix)
    if args.k > matrix.m:
        raise ValidationError(
            f"k exceeds number of labelling functions (k={args.k}, m={matrix.m})"
        )
    if args.route in FA_ROUTES:
        cfg = _fit_config(args)
        fitter = fit_fa_em if args.route == "fa-em" else fit_fa_vi
        params, report = fitter(matrix, cfg)
        model = build_label_model(
            params,
            matrix,
            threshold_kind=THRESHOLD_FLAGS[args.threshold],
            dev=_dev_split(args),
        )
        save_label_model(model, args.out)
    elif args.route == "ci-em":
        params, report = fit_ci_em(matrix, max_iter=args.max_iter, tol=args.tol, seed=args.seed)
        save_ci_params(params, args.out)
    else:
        raise ValidationError("route 'majority' requires no fitting; use it with compare or sweep")
    if args.report is not None:
        _write_json(_report_payload(report), args.report)
    return 0


def cmd_predict(args) -> int:
    kind, model = _load_model_file(args.model)
    matrix = load_label_matrix(args.matrix)
    if kind == "fa":
        preds = predict(model, matrix)
    else:
        posterior = ci_posterior(model, matrix)
        preds = Predictions(
            labels=(posterior > 0.5).astype(np.int64), scores=posterior
        )
    save_predictions(preds, args.out)
    return 0


def _load_predictions_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"predictions file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "index,score,label":
        raise ValidationError(f"{path}: expected header 'index,score,label'")
    labels = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ValidationError(f"{path}: line {line_no} has {len(parts)} fields, expected 3")
        try:
            labels.append(int(parts[2]))
        except ValueError:
            raise ValidationError(f"{path}: non-integer label at line {line_no}") from None
    if not labels:
        raise ValidationError(f"{path}: no data rows")
    return np.array(labels, dtype=np.int64)


def cmd_evaluate(args) -> int:
    pred = _load_predictions_csv(args.predictions)
    gold = load_gold_labels(args.gold)
    report = evaluate(pred, gold)
    text = report.to_json()
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    train = load_label_matrix(args.train)
    test = load_label_matrix(args.test)
    gold = load_gold_labels(args.gold)
    if gold.n != test.n:
        raise ValidationError(
            f"gold labels have {gold.n} rows but the test matrix has {test.n}"
        )
    cfg = _fit_config(args)
    threshold_kind = THRESHOLD_FLAGS[args.threshold]
    dev = _dev_split(args)
    rows = []
    for method in ALL_ROUTES:
        if method in FA_ROUTES:
            model = train_label_model(
                train, cfg, threshold_kind=threshold_kind, dev=dev,
                route=method.split("-")[1],
            )
            labels = predict(model, test).labels
        elif method == "ci-em":
            params, _ = fit_ci_em(train, max_iter=args.max_iter, tol=args.tol, seed=args.seed)
            labels = (ci_posterior(params, test) > 0.5).astype(np.int64)
        else:
            labels = majority_vote(test)
        rows.append((method, evaluate(labels, gold)))
    lines = ["method,accuracy,precision,recall,f1,tp,fp,tn,fn,n"]
    for method, r in rows:
        lines.append(
            f"{method},{r.accuracy!r},{r.precision!r},{r.recall!r},{r.f1!r},"
            f"{r.tp},{r.fp},{r.tn},{r.fn},{r.n}"
        )
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_sweep(args) -> int:
    train = load_label_matrix(args.train)
    test = load_label_matrix(args.test)
    gold = load_gold_labels(args.gold)
    try:
        sizes = tuple(int(s) for s in args.sizes.split(","))
    except ValueError:
        raise ValidationError(f"--sizes: cannot parse {args.sizes!r}") from None
    methods = tuple(args.methods.split(","))
    result = robustness_sweep(
        train,
        test,
        gold,
        sizes=sizes,
        repeats=args.repeats,
        seed=args.seed,
        methods=methods,
        cfg=_fit_config(args),
        threshold_kind=THRESHOLD_FLAGS[args.threshold],
    )
    Path(args.out).write_text(result.to_csv(), encoding="utf-8")
    return 0


def cmd_stats(args) -> int:
    stats = matrix_stats(load_label_matrix(args.matrix))
    lines = ["metric,lf,value"]
    lines.append(f"n_rows,,{stats.n_rows}")
    lines.append(f"n_lfs,,{stats.n_lfs}")
    lines.append(f"n_all_abstain_rows,,{stats.n_all_abstain_rows}")
    lines.append(f"all_abstain_fraction,,{stats.all_abstain_fraction!r}")
    for name, (n_abstain, n_neg, n_pos) in zip(stats.lf_names, stats.counts):
        lines.append(f"count_abstain,{name},{int(n_abstain)}")
        lines.append(f"count_negative,{name},{int(n_neg)}")
        lines.append(f"count_positive,{name},{int(n_pos)}")
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_cov(args) -> int:
    matrix = load_label_matrix(args.matrix)
    cov = covariance_matrix(matrix)
    lines = [",".join(matrix.lf_names)]
    for row in cov:
        lines.append(",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    if args.spec is not None:
        spec = load_spec(args.spec)
    else:
        spec = SyntheticSpec(
            n=args.n,
            m=args.m,
            class_prior=args.class_prior,
            accuracies=_parse_per_lf(args.accuracy, args.m, "--accuracy"),
            propensities=_parse_per_lf(args.propensity, args.m, "--propensity"),
            seed=args.seed,
        )
    matrix, gold = generate(spec)
    save_label_matrix(matrix, args.out_matrix)
    save_gold_labels(gold, args.out_gold)
    return 0


def cmd_apply_lfs(args) -> int:
    path = Path(args.records)
    if not path.is_file():
        raise ValidationError(f"records file not found: {path}")
    records = path.read_text(encoding="utf-8").splitlines()
    specs = load_lf_specs(args.specs)
    matrix = apply_lfs(records, specs)
    save_label_matrix(matrix, args.out)
    return 0


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=1, help="latent dimension (default 1)")
    p.add_argument("--seed", type=int, default=123, help="random seed (default 123)")
    p.add_argument("--tol", type=float, default=1e-4, help="convergence tolerance (default 1e-4)")
    p.add_argument("--max-iter", type=int, default=1000, help="iteration cap (default 1000)")
    p.add_argument("--init", choices=("svd", "random"), default="svd", help="initialization")
    p.add_argument(
        "--threshold",
        choices=tuple(THRESHOLD_FLAGS),
        default="median",
        help="dichotomization threshold (default median)",
    )
    p.add_argument("--dev-matrix", default=None, help="dev labelling matrix (cdf-youden only)")
    p.add_argument("--dev-gold", default=None, help="dev gold labels (cdf-youden only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="falabel",
        description="Weak-supervision label models over labelling-matrix CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a label model on a labelling matrix")
    p.add_argument("matrix", help="training labelling-matrix CSV")
    p.add_argument("--route", choices=ALL_ROUTES, default="fa-em")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--report", default=None, help="optional fit-report JSON")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict labels with a saved model")
    p.add_argument("model", help="model JSON from fit")
    p.add_argument("matrix", help="labelling-matrix CSV to score")
    p.add_argument("--out", required=True, help="output predictions CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("predictions", help="predictions CSV from predict")
    p.add_argument("gold", help="gold labels CSV (header 'y')")
    p.add_argument("--out", default=None, help="output report JSON (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="run all methods on one train/test split")
    p.add_argument("train", help="training labelling-matrix CSV")
    p.add_argument("test", help="test labelling-matrix CSV")
    p.add_argument("gold", help="test gold labels CSV")
    p.add_argument("--out", required=True, help="output table CSV")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="training-size robustness sweep")
    p.add_argument("train", help="training labelling-matrix CSV")
    p.add_argument("test", help="test labelling-matrix CSV")
    p.add_argument("gold", help="test gold labels CSV")
    p.add_argument("--sizes", default="10,20,30,40,50,60", help="comma list of subsample sizes")
    p.add_argument("--repeats", type=int, default=5, help="repeats per size (default 5)")
    p.add_argument("--methods", default="fa-em,ci-em,majority", help="comma list of methods")
    p.add_argument("--out", required=True, help="output sweep CSV")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="labelling-matrix summary statistics")
    p.add_argument("matrix", help="labelling-matrix CSV")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("cov", help="column covariance matrix of a labelling matrix")
    p.add_argument("matrix", help="labelling-matrix CSV")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_cov)

    p = sub.add_parser("synth", help="generate a synthetic matrix with gold labels")
    p.add_argument("--spec", default=None, help="synthetic spec JSON (overrides flags)")
    p.add_argument("--n", type=int, default=1000, help="rows (default 1000)")
    p.add_argument("--m", type=int, default=5, help="labelling functions (default 5)")
    p.add_argument("--class-prior", type=float, default=0.5, help="P(y=1) (default 0.5)")
    p.add_argument(
        "--accuracy",
        default="0.8",
        help="per-LF accuracy: float, comma list, or lo:hi linspace range",
    )
    p.add_argument(
        "--propensity",
        default="1.0",
        help="per-LF vote propensity: float, comma list, or lo:hi range",
    )
    p.add_argument("--seed", type=int, default=123, help="random seed (default 123)")
    p.add_argument("--out-matrix", required=True, help="output labelling-matrix CSV")
    p.add_argument("--out-gold", required=True, help="output gold labels CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("apply-lfs", help="apply keyword/regex LFs to text records")
    p.add_argument("records", help="UTF-8 text file, one record per line")
    p.add_argument("specs", help="JSON array of LF specs")
    p.add_argument("--out", required=True, help="output labelling-matrix CSV")
    p.set_defaults(func=cmd_apply_lfs)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())
