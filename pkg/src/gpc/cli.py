"""Command-line interface: ``gpc gen|fit|eval|probe-k|export``.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.
"""
import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import fields

import numpy as np

from . import datasetio
from .config import RunConfig, default_k_init, load_config
from .errors import ConfigError, GPCError, NumericalError
from .estimate import estimate_k_loop, probe_k_on_labelled
from .evalmetrics import hungarian_acc
from .splitmerge import replay
from .sskmeans import LabelConstraints

log = logging.getLogger("gpc")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _add_config_flags(p):
    p.add_argument("--config", help="flat 'key = value' config file; flags win")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "replearn":
            p.add_argument("--replearn", dest="replearn", action="store_true", default=None)
            p.add_argument("--no-replearn", dest="replearn", action="store_false")
        elif f.name == "k_init":
            p.add_argument(flag, dest="k_init", default=None, help="integer or 'auto'")
        else:
            p.add_argument(flag, dest=f.name, default=None)


def _config_from(args):
    from .config import parse_value

    overrides = {}
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is None:
            continue
        overrides[f.name] = val if isinstance(val, bool) else parse_value(f.name, str(val))
    return load_config(args.config, overrides)


def _json_dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_truth_for(ds, path):
    ids, truth = datasetio.load_truth(path)
    if len(ids) != ds.n or not np.array_equal(np.sort(ids), np.sort(ds.ids)):
        raise datasetio.DimMismatch("truth ids do not match the dataset ids")
    order = {int(i): k for k, i in enumerate(ids)}
    return truth[[order[int(i)] for i in ds.ids]]


def evaluate(ds, truth, assignment):
    """ACC over the unlabelled instances, old classes = labelled classes."""
    unl = ~ds.labelled
    if not unl.any():
        raise datasetio.DimMismatch("no unlabelled instances to evaluate")
    return hungarian_acc(truth[unl], np.asarray(assignment)[unl], ds.labelled_classes)


# --- subcommands ------------------------------------------------------------

def cmd_gen(args):
    spec = datasetio.SynthSpec(
        k_true=args.k_true, d=args.d, per_class=args.per_class, center_scale=args.center_scale,
        sigma=args.sigma, kl=args.kl, labelled_fraction=args.labelled_fraction, seed=args.seed,
        min_separation=args.min_separation, intrinsic_dim=args.intrinsic_dim, noise=args.noise,
    )
    ds, truth = datasetio.gen_synth(spec)
    datasetio.save_features(ds, args.out)
    datasetio.save_truth(ds.ids, truth, datasetio.truth_path(args.out))
    print(json.dumps({"dataset": args.out, "truth": datasetio.truth_path(args.out), "n": ds.n, "d": ds.dim}))
    return 0


def run_fit(data, cfg, prefix, trace=False, truth=None):
    ds = datasetio.load_features(data)
    cons = LabelConstraints.from_labels(ds.labels)
    t0 = time.perf_counter()
    result = estimate_k_loop(ds.X, cons, cfg)
    wall = time.perf_counter() - t0
    report = None
    truth_file = truth or datasetio.truth_path(data)
    if os.path.exists(truth_file):
        report = evaluate(ds, _load_truth_for(ds, truth_file), result.assignment).to_dict()
    trace_path = f"{prefix}.trace.jsonl" if trace else None
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            for rec in result.records:
                fh.write(json.dumps(rec, sort_keys=True, default=_jsonable) + "\n")
    assign_path = f"{prefix}.assign.csv"
    with open(assign_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,cluster\n")
        for i, k in zip(ds.ids, result.assignment):
            fh.write(f"{int(i)},{int(k)}\n")
    out = {
        "input": {"path": os.path.basename(data), "sha256": _sha256(data)},
        "config": cfg.to_dict(),
        "k_init": result.k_init,
        "k_est": result.K,
        "k_history": result.k_history,
        "epochs_run": result.epochs_run,
        "constraint_violations": int(sum(result.violations)),
        "prototypes": result.prototypes,
        "eval": report,
        "assignments": os.path.basename(assign_path),
        "trace": os.path.basename(trace_path) if trace_path else None,
        "wall_clock_s": wall,
    }
    _json_dump(out, f"{prefix}.results.json")
    return out


def cmd_fit(args):
    cfg = _config_from(args)
    prefix = args.out_prefix or os.path.splitext(args.data)[0]
    out = run_fit(args.data, cfg, prefix, trace=args.trace, truth=args.truth)
    summary = {k: out[k] for k in ("k_init", "k_est", "epochs_run")}
    summary["results"] = f"{prefix}.results.json"
    if out["eval"]:
        summary.update({k: out["eval"][k] for k in ("acc_all", "acc_old", "acc_new")})
    print(json.dumps(summary, sort_keys=True))
    return 0


def read_assignments(path):
    ids, clusters = [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "id,cluster":
            raise datasetio.ParseError("assignment file must start with 'id,cluster'", line=1)
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                a, b = line.strip().split(",")
                ids.append(int(a))
                clusters.append(int(b))
            except ValueError:
                raise datasetio.ParseError("bad assignment row", line=lineno) from None
    return np.array(ids, dtype=np.int64), np.array(clusters, dtype=np.int64)


def cmd_eval(args):
    ds = datasetio.load_features(args.data)
    truth = _load_truth_for(ds, args.truth or datasetio.truth_path(args.data))
    ids, clusters = read_assignments(args.assignments)
    if len(ids) != ds.n or set(ids.tolist()) != set(ds.ids.tolist()):
        raise datasetio.DimMismatch("assignment ids do not match the dataset ids")
    pos = {int(i): k for k, i in enumerate(ids)}
    pred = clusters[[pos[int(i)] for i in ds.ids]]
    _json_dump(evaluate(ds, truth, pred).to_dict())
    return 0


def cmd_probe_k(args):
    cfg = _config_from(args)
    ds = datasetio.load_features(args.data)
    if args.sweep:
        rows = []
        for kn_init in (int(v) for v in args.sweep.split(",")):
            retained = len(ds.labelled_classes) - int(np.floor(args.ratio * len(ds.labelled_classes) + 0.5))
            run_cfg = cfg.replace(k_init=retained + kn_init)
            est, true_kn, _ = probe_k_on_labelled(ds.X, ds.labels, args.ratio, run_cfg, seed=cfg.seed)
            rows.append({"kn_init": kn_init, "kn_est": est, "kn_true": true_kn})
        print(f"{'K^n_init':>10} {'K^n est':>8} {'K^n true':>9}")
        for r in rows:
            print(f"{r['kn_init']:>10} {r['kn_est']:>8} {r['kn_true']:>9}")
        return 0
    est, true_kn, result = probe_k_on_labelled(ds.X, ds.labels, args.ratio, cfg, seed=cfg.seed)
    _json_dump({"kn_est": est, "kn_true": true_kn, "k_est": result.K, "k_init": result.k_init,
                "k_history": result.k_history, "ratio": args.ratio})
    return 0


def cmd_export(args):
    if args.replay:
        with open(args.replay, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        uids = replay(records)
        final = next((r for r in records if r.get("type") == "final"), None)
        _json_dump({"k_replayed": len(uids), "uids": uids,
                    "k_logged": final["K"] if final else None,
                    "consistent": bool(final and final["uids"] == uids)})
        return 0
    if not (args.src and args.dst):
        raise UsageError("export needs SRC and DST, or --replay TRACE")
    ds = datasetio.load_features(args.src)
    datasetio.save_features(ds, args.dst)
    src_truth = datasetio.truth_path(args.src)
    if os.path.exists(src_truth):
        ids, truth = datasetio.load_truth(src_truth)
        datasetio.save_truth(ids, truth, datasetio.truth_path(args.dst))
    print(json.dumps({"written": args.dst}))
    return 0


def build_parser():
    p = Parser(prog="gpc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=Parser)
    sub.required = True

    g = sub.add_parser("gen", help="generate a synthetic dataset and truth sidecar")
    g.add_argument("--k-true", type=int, default=10)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--per-class", type=int, default=200)
    g.add_argument("--kl", type=int, default=6)
    g.add_argument("--center-scale", type=float, default=50.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--labelled-fraction", type=float, default=0.5)
    g.add_argument("--min-separation", type=float, default=10.0)
    g.add_argument("--intrinsic-dim", type=int, default=None)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="data.gpcf")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="estimate K and cluster a dataset")
    f.add_argument("data")
    _add_config_flags(f)
    f.add_argument("--out-prefix", default=None)
    f.add_argument("--truth", default=None)
    f.add_argument("--trace", action="store_true", help="write the split/merge trace stream")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="score an assignment file against ground truth")
    e.add_argument("assignments")
    e.add_argument("data")
    e.add_argument("--truth", default=None)
    e.set_defaults(func=cmd_eval)

    k = sub.add_parser("probe-k", help="estimate hidden labelled classes")
    k.add_argument("data")
    k.add_argument("--ratio", type=float, default=0.5)
    k.add_argument("--sweep", default=None, help="comma-separated K^n_init values")
    _add_config_flags(k)
    k.set_defaults(func=cmd_probe_k)

    x = sub.add_parser("export", help="convert a dataset between csv and gpcf, or replay a trace")
    x.add_argument("src", nargs="?")
    x.add_argument("dst", nargs="?")
    x.add_argument("--replay", default=None, metavar="TRACE")
    x.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    except (GPCError, ValueError, OSError) as exc:
        code = exc.exit_code if isinstance(exc, GPCError) else 2
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return NumericalError.exit_code


if __name__ == "__main__":
    sys.exit(main())
