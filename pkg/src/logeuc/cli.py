"""Command-line front end: ``logeuc {extract,lab,sweep,train,eval,gram}``.

Exit codes: 0 ok, 2 parse error, 3 pipeline or dimension error,
4 lab assertion failure, 5 training failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (SvmModel, accuracy, confusion_matrix, load_model, save_model,
                       stratified_split, train_kernel, train_linear)
from .data import (descriptor_pipeline, generate_synthetic, load_descriptors, load_sequences,
                   save_descriptors)
from .errors import LogEucError, NonFinite, ParseError, SingleClass
from .estimator import (DEFAULT_EPS_GRID, MIN_TAIL_TRIALS, chebyshev_curve, compute_c_rho, run_bias_trial,
                        run_variance_sweep)
from .kernels import exact_gram, induced_gram, write_gram_csv
from .maps import SCHEMES, DegreeDistribution, map_from_dict, map_to_dict, sample_map
from .plotting import plot_chebyshev, plot_sweep, plot_variance
from .spd import matrix_log, normalize_log
from .sweep import (DEFAULT_SIGMA_GRID, DEFAULT_NU_GRID, SWEEP_HEADER, SweepConfig, SweepFailure,
                    default_threads, run_sweep, write_rows)

EXIT_OK, EXIT_PARSE, EXIT_PIPELINE, EXIT_LAB, EXIT_TRAIN = 0, 2, 3, 4, 5

BIAS_HEADER = ["pair_id", "scheme", "nu", "trials", "sample_mean", "sample_variance",
               "exact_value", "standard_error", "z_score", "bound_value"]
CHEB_HEADER = ["scheme", "nu", "epsilon", "empirical_tail", "measured_bound", "analytic_bound",
               "binomial_se"]
CONFUSION_HEADER_PREFIX = "true\\pred"


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _schemes(text):
    if text == "all":
        return list(SCHEMES)
    out = [s.strip() for s in text.split(",")]
    bad = [s for s in out if s not in SCHEMES]
    if bad:
        raise CliError(EXIT_PARSE, f"unknown scheme(s) {bad}; choose from {SCHEMES} or 'all'")
    return out


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file or directory")


def _add_synthetic(p):
    g = p.add_argument_group("synthetic data (used when no input file is given)")
    g.add_argument("--classes", type=int, default=5)
    g.add_argument("--per-class", type=int, default=20)
    g.add_argument("--joints", type=int, default=15)
    g.add_argument("--frames", type=int, nargs=2, default=(80, 160), metavar=("MIN", "MAX"))
    g.add_argument("--data-seed", type=int, default=None, help="defaults to --seed")
    g.add_argument("--hip", type=int, default=0, help="hip joint index")
    g.add_argument("--ridge", type=float, default=1e-4,
                   help="ridge added to covariances, relative to the mean diagonal")


def _descriptor_set(args):
    """Descriptors from --descriptors, --input sequences, or the synthetic generator."""
    if getattr(args, "descriptors", None):
        return load_descriptors(args.descriptors)
    if getattr(args, "input", None):
        seqs = load_sequences(args.input, args.format)
    else:
        seqs = generate_synthetic(args.classes, args.per_class, args.joints, tuple(args.frames),
                                  seed=args.seed if args.data_seed is None else args.data_seed)
    return descriptor_pipeline(seqs, args.hip, args.ridge)


def _labeled(dset):
    if dset.labels.size and dset.labels.min() < 0:
        raise CliError(EXIT_PIPELINE, "some descriptors have no label")
    if not dset.descriptors:
        raise CliError(EXIT_PIPELINE, "no descriptors available")
    return dset.descriptors, dset.labels


# --- extract ---------------------------------------------------------------

def cmd_extract(args):
    dset = _descriptor_set(args)
    params = {"hip": args.hip, "ridge": args.ridge}
    if not args.input:
        params.update(classes=args.classes, per_class=args.per_class, joints=args.joints,
                      frames=list(args.frames),
                      data_seed=args.seed if args.data_seed is None else args.data_seed)
    save_descriptors(dset, args.out, params)
    print(f"descriptors: {len(dset.descriptors)} (dim {dset.dim}) -> {args.out}")
    if dset.rejected:
        for i, reason in sorted(dset.rejected.items()):
            print(f"rejected sequence {i}: {reason}")
    if not dset.descriptors:
        raise CliError(EXIT_PIPELINE, "every sequence was rejected")
    return EXIT_OK


# --- lab -------------------------------------------------------------------

def _random_log_descriptor(rng, dim):
    b = rng.standard_normal((dim, dim))
    return normalize_log(matrix_log(b @ b.T + 0.1 * np.eye(dim)))


def _lab_pair(args):
    if args.descriptors:
        dset = load_descriptors(args.descriptors)
        i, j = args.pair
        n = len(dset.descriptors)
        if not (0 <= i < n and 0 <= j < n):
            raise CliError(EXIT_PIPELINE, f"pair ({i}, {j}) out of range for {n} descriptors")
        return dset.descriptors[i], dset.descriptors[j], f"{i}-{j}"
    rng = np.random.default_rng(args.pair_seed)
    x = _random_log_descriptor(rng, args.dim)
    y = x if args.identical else _random_log_descriptor(rng, args.dim)
    return x, y, f"synthetic{args.pair_seed}"


def cmd_lab(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.sweep_trials < MIN_TAIL_TRIALS:
        raise CliError(EXIT_PIPELINE, f"--sweep-trials must be at least {MIN_TAIL_TRIALS} "
                                      "for the concentration tables")
    x, y, pair_id = _lab_pair(args)
    schemes = _schemes(args.scheme)
    dist = DegreeDistribution(args.theta)
    nu_grid = _ints(args.nu_grid)

    bias, sweeps, slopes, cheb_rows, cheb_tables = [], {}, {}, [], {}
    for scheme in schemes:
        bias.append(run_bias_trial(x, y, scheme, args.nu, args.sigma, dist, args.trials,
                                   args.seed, pair_id))
        reports, slope = run_variance_sweep(x, y, scheme, nu_grid, args.sigma, dist,
                                            args.sweep_trials, args.seed, pair_id)
        sweeps[scheme], slopes[scheme] = reports, slope
        for r in reports:
            tab = chebyshev_curve(r, _floats(args.eps_grid))
            cheb_rows.extend({"scheme": scheme, "nu": r.nu, **row} for row in tab.rows())
            if scheme == "rgw" and r.nu in (nu_grid[0], nu_grid[-1]):
                cheb_tables[f"rgw nu={r.nu}"] = tab

    write_rows(out / "bias.csv", BIAS_HEADER, [r.row() for r in bias])
    write_rows(out / "variance.csv", BIAS_HEADER + ["slope"],
               [{**r.row(), "slope": slopes[s]} for s in schemes for r in sweeps[s]])
    write_rows(out / "chebyshev.csv", CHEB_HEADER, cheb_rows)
    c_rho = compute_c_rho(dist)
    summary = {
        "pair_id": pair_id, "sigma": args.sigma, "theta": args.theta, "bias_nu": args.nu,
        "bias_trials": args.trials, "sweep_trials": args.sweep_trials, "nu_grid": nu_grid,
        "c_rho": {"truncated_sum": c_rho.truncated_sum, "closed_form": c_rho.closed_form},
        "schemes": {s: {"z_score": b.z_score, "variance_slope": slopes[s],
                        "reference_slopes": [-3.0, -1.0]}
                    for s, b in zip(schemes, bias)},
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    plot_variance(sweeps, out / "variance.svg")
    if cheb_tables:
        plot_chebyshev(cheb_tables, out / "chebyshev.svg")

    for s, b in zip(schemes, bias):
        print(f"{s:10s} |z|={b.z_score:.3f}  variance slope={slopes[s]:+.3f} "
              f"(reference slopes -3 and -1)")
    worst = max(b.z_score for b in bias)
    print(f"max |z-score| = {worst:.3f}")
    if worst > 4.0:
        raise CliError(EXIT_LAB, f"unbiasedness check failed: |z| = {worst:.3f} > 4")
    return EXIT_OK


# --- sweep -----------------------------------------------------------------

def cmd_sweep(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    dset = _descriptor_set(args)
    descs, labels = _labeled(dset)
    t_desc = time.perf_counter() - t0
    cfg = SweepConfig(
        nu_grid=tuple(_ints(args.nu_grid)), repetitions=args.repetitions,
        schemes=tuple(_schemes(args.scheme)),
        sigma=None if args.sigma_cv else args.sigma,
        sigma_grid=tuple(_floats(args.sigma_cv)) if args.sigma_cv else DEFAULT_SIGMA_GRID,
        c_param=args.c_param, theta=args.theta, test_fraction=args.test_fraction,
        seed=args.seed, threads=args.threads or default_threads())

    partial = []

    def flush(row):
        partial.append(row)
        write_rows(out / "sweep.csv", SWEEP_HEADER, partial)

    try:
        res = run_sweep(descs, labels, cfg, on_row=flush)
    except SweepFailure as exc:
        raise CliError(EXIT_TRAIN, str(exc)) from None

    rows = res.rows + [{"scheme": "exact", "nu": 0, "effective_nu": 0, "repetitions": 1,
                        "mean_accuracy": res.exact_accuracy, "sd_accuracy": 0.0}]
    write_rows(out / "sweep.csv", SWEEP_HEADER, rows)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump({"sigma": res.sigma, "exact_accuracy": res.exact_accuracy,
                   "exact_gram_calls": res.exact_gram_calls, "samples": len(descs),
                   "dim": descs[0].dim, "config": {k: (list(v) if isinstance(v, tuple) else v)
                                                   for k, v in vars(cfg).items()
                                                   if k != "threads"}},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    timings = {"descriptors": t_desc, **res.timings}
    with open(out / "timings.json", "w", encoding="utf-8") as fh:
        json.dump(timings, fh, indent=2, sort_keys=True)
        fh.write("\n")
    plot_sweep(res.rows, res.exact_accuracy, out / "sweep.svg", png=args.png)

    print(f"exact Log-Euclidean SVM (sigma={res.sigma:g}): accuracy {res.exact_accuracy:.4f}")
    for r in res.rows:
        print(f"{r['scheme']:10s} nu={r['effective_nu']:5d}  "
              f"accuracy {r['mean_accuracy']:.4f} +- {r['sd_accuracy']:.4f}")
    print("stage timings [s]: " + ", ".join(f"{k}={v:.2f}" for k, v in timings.items()))
    return EXIT_OK


# --- train / eval ----------------------------------------------------------

def _split(labels, which, fraction, seed):
    if which == "all":
        return np.arange(labels.size)
    tr, te = stratified_split(labels, fraction, seed)
    return tr if which == "train" else te


def cmd_train(args):
    dset = load_descriptors(args.descriptors)
    descs, labels = _labeled(dset)
    idx = _split(labels, args.split, args.test_fraction, args.seed)
    chosen = [descs[i] for i in idx]
    meta = {"split": args.split, "test_fraction": args.test_fraction, "split_seed": args.seed,
            "sigma": args.sigma, "scheme": args.scheme}
    try:
        if args.scheme == "exact":
            gram = exact_gram(chosen, args.sigma)
            meta["train_vectors"] = [d.vector.tolist() for d in chosen]
            model = train_kernel(gram, labels[idx], args.c_param, seed=args.seed, metadata=meta)
        else:
            fmap = sample_map(args.scheme, dset.dim, args.nu, args.sigma, args.seed,
                              theta=args.theta)
            meta["map"] = map_to_dict(fmap)
            model = train_linear(fmap.transform(chosen), labels[idx], args.c_param,
                                 seed=args.seed, metadata=meta)
    except (SingleClass, NonFinite, AssertionError) as exc:
        raise CliError(EXIT_TRAIN, f"training failed: {exc}") from None
    save_model(model, args.out)
    acc = accuracy(model.predict(_model_inputs(model, chosen)), labels[idx])
    print(f"trained {model.mode} model on {len(chosen)} samples; training accuracy {acc:.4f}")
    return EXIT_OK


def _model_inputs(model: SvmModel, descs):
    meta = model.metadata
    if model.mode == "dual":
        train = np.array(meta["train_vectors"])
        rows = np.array([d.vector for d in descs])
        if rows.shape[1] != train.shape[1]:
            raise CliError(EXIT_PIPELINE, f"descriptor length {rows.shape[1]} does not match "
                                          f"model training length {train.shape[1]}")
        sigma = float(meta["sigma"])
        return np.exp((np.clip(rows @ train.T, -1.0, 1.0) - 1.0) / sigma**2)
    fmap = map_from_dict(meta["map"])
    if descs and descs[0].dim != fmap.dim:
        raise CliError(EXIT_PIPELINE,
                       f"descriptor dim {descs[0].dim} does not match model map dim {fmap.dim}")
    return fmap.transform(descs)


def cmd_eval(args):
    model = load_model(args.model)
    dset = load_descriptors(args.descriptors)
    descs, labels = _labeled(dset)
    meta = model.metadata
    if args.nu is not None:
        model_nu = meta.get("map", {}).get("nu")
        if model_nu != args.nu:
            raise CliError(EXIT_PIPELINE, f"requested nu={args.nu} but model expects nu={model_nu}")
    which = args.split or ("test" if meta.get("split") == "train" else "all")
    idx = _split(labels, which, meta.get("test_fraction", 0.5), meta.get("split_seed", 0))
    chosen = [descs[i] for i in idx]
    pred = model.predict(_model_inputs(model, chosen))
    truth = labels[idx]
    acc = accuracy(pred, truth)
    classes = max(model.classes, int(truth.max()) + 1)
    cm = confusion_matrix(pred, truth, classes)
    with np.errstate(invalid="ignore", divide="ignore"):
        recall = np.diag(cm) / cm.sum(axis=1)
    print(f"accuracy {acc:.6f} on {len(chosen)} samples ({which} split)")
    for k, r in enumerate(recall):
        print(f"class {k}: recall {'nan' if math.isnan(r) else f'{r:.4f}'}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(",".join([CONFUSION_HEADER_PREFIX] + [str(k) for k in range(classes)]) + "\n")
            for k in range(classes):
                fh.write(",".join([str(k)] + [str(int(v)) for v in cm[k]]) + "\n")
    return EXIT_OK


# --- gram ------------------------------------------------------------------

def cmd_gram(args):
    dset = load_descriptors(args.descriptors)
    if args.scheme == "exact":
        gram = exact_gram(dset.descriptors, args.sigma)
    else:
        fmap = sample_map(args.scheme, dset.dim, args.nu, args.sigma, args.seed, theta=args.theta)
        gram = induced_gram(fmap.transform(dset.descriptors),
                            {"scheme": args.scheme, "nu": args.nu, "sigma": args.sigma,
                             "seed": args.seed})
    write_gram_csv(gram, args.out)
    print(f"{gram.source.get('kind')} Gram {gram.n}x{gram.n} -> {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="logeuc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="skeleton sequences -> log descriptors")
    _add_common(p)
    p.add_argument("--input", help="CSV or JSONL skeleton file (synthetic data if omitted)")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None)
    _add_synthetic(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("lab", help="unbiasedness, variance and concentration checks")
    _add_common(p)
    p.add_argument("--descriptors", help="descriptor file; default is a synthetic pair")
    p.add_argument("--pair", type=int, nargs=2, default=(0, 1), metavar=("I", "J"))
    p.add_argument("--dim", type=int, default=10, help="dimension of the synthetic pair")
    p.add_argument("--pair-seed", type=int, default=0)
    p.add_argument("--identical", action="store_true", help="use X = Y for the synthetic pair")
    p.add_argument("--scheme", "--schemes", dest="scheme", default="rgw",
                   help="comma-separated schemes or 'all'")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--nu", type=int, default=8, help="nu for the bias trials")
    p.add_argument("--nu-grid", default="16,32,64,128,256")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--sweep-trials", type=int, default=20_000)
    p.add_argument("--eps-grid", default=",".join(str(e) for e in DEFAULT_EPS_GRID))
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_lab)

    p = sub.add_parser("sweep", help="accuracy against nu for every scheme")
    _add_common(p)
    p.add_argument("--descriptors", help="descriptor file; otherwise --input or synthetic data")
    p.add_argument("--input")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None)
    _add_synthetic(p)
    p.add_argument("--scheme", "--schemes", dest="scheme", default="all",
                   help="comma-separated schemes or 'all'")
    p.add_argument("--nu-grid", default=",".join(str(v) for v in DEFAULT_NU_GRID))
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--sigma-cv", default=None, metavar="GRID",
                   help="comma-separated sigma grid; selects sigma by cross validation")
    p.add_argument("--c-param", type=float, default=10.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--test-fraction", type=float, default=0.5)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--png", action="store_true", help="also write a PNG next to the SVG")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train a linear (feature map) or exact-kernel SVM")
    _add_common(p)
    p.add_argument("--descriptors", required=True)
    p.add_argument("--scheme", default="rgw", choices=list(SCHEMES) + ["exact"])
    p.add_argument("--nu", type=int, default=1000)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--c-param", type=float, default=10.0)
    p.add_argument("--split", choices=("train", "all"), default="train")
    p.add_argument("--test-fraction", type=float, default=0.5)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--descriptors", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default=None,
                   help="defaults to the held-out part of the training split")
    p.add_argument("--nu", type=int, default=None, help="expected feature dimension")
    p.add_argument("--out", help="confusion matrix CSV")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gram", help="export an exact or induced Gram matrix as CSV")
    _add_common(p)
    p.add_argument("--descriptors", required=True)
    p.add_argument("--scheme", default="exact", choices=list(SCHEMES) + ["exact"])
    p.add_argument("--nu", type=int, default=1000)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.set_defaults(func=cmd_gram)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except LogEucError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
