"""``quasirand`` command-line interface.

Exit codes
----------
0   success
1   missing or unreadable file
2   invalid input (model, partition, thresholds, flags)
3   membership resampling exhausted (empty cluster)
4   disconnected graph where an irreducible one is required
5   enumeration cap or budget exceeded
6   replay produced different bytes
10+i  ``verify``: the i-th requested property (1-based) was the first to fail
"""

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings as warnings_mod

from . import __version__
from .clustering import k_variance
from .discrepancy import (BudgetExceededError, CapExceededError, DISCREPANCY_CAP,
                          discrepancy_spectral_bounds, min_k_discrepancy,
                          partition_discrepancy_exact, partition_discrepancy_heuristic)
from .generator import EmptyClusterError, SampleSpec, sample
from .graph import Partition, format_edge_list, read_edge_list
from .model import ModelError, load_model
from .spectra import DisconnectedGraphError, spectral_summary
from .subgraphs import BudgetExceededError as HomBudgetError
from .verify import (PROPERTIES, NoStructureError, Thresholds, check_P0_proxy, check_PI,
                     check_PI_plus, check_PII, check_PIII, check_PIV, classify_structure,
                     load_thresholds, rate_sweep, RATE_METRICS, _jsonable)

EXIT_IO, EXIT_INPUT, EXIT_RESAMPLE, EXIT_DISCONNECTED, EXIT_CAP, EXIT_REPLAY = 1, 2, 3, 4, 5, 6


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def dump_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise CliError(EXIT_IO, f"{what} file not found: {path}")
    except json.JSONDecodeError as err:
        raise CliError(EXIT_INPUT, f"{what} file is not valid JSON: {err}")


def _load_graph(path):
    if not os.path.exists(path):
        raise CliError(EXIT_IO, f"graph file not found: {path}")
    try:
        return read_edge_list(path)
    except OSError as err:
        raise CliError(EXIT_IO, str(err))
    except ValueError as err:
        raise CliError(EXIT_INPUT, f"invalid edge list: {err}")


def _load_model(path):
    if not os.path.exists(path):
        raise CliError(EXIT_IO, f"model file not found: {path}")
    try:
        return load_model(path)
    except ModelError as err:
        raise CliError(EXIT_INPUT, f"invalid model: {err}")


def _load_partition(path, n):
    data = _read_json(path, "partition")
    if isinstance(data, dict):
        data = data.get("partition")
    if not isinstance(data, list) or not all(isinstance(x, int) for x in data):
        raise CliError(EXIT_INPUT, "partition must be a JSON array of integer labels")
    try:
        p = Partition(data)
    except ValueError as err:
        raise CliError(EXIT_INPUT, f"invalid partition: {err}")
    if p.n != n:
        raise CliError(EXIT_INPUT, f"partition has {p.n} labels, graph has {n} vertices")
    return p


def _int_list(text, what):
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi)))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(EXIT_INPUT, f"cannot parse {what}: {text!r}")


def _default_jobs():
    try:
        return max(1, int(os.environ.get("QUASIRAND_JOBS", "1")))
    except ValueError:
        return 1


# manifests ---------------------------------------------------------------

POSITIONALS = {
    "generate": ["model"],
    "analyze": ["graph"],
    "discrepancy": ["graph"],
    "verify": ["graph"],
    "sweep": ["model"],
}
NOT_RECORDED = {"command", "jobs", "func"}


def manifest_for(args, outputs):
    names = POSITIONALS[args.command]
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in NOT_RECORDED and k not in names and v is not None and v is not False}
    return {
        "command": args.command,
        "inputs": {name: getattr(args, name) for name in names},
        "seed": int(getattr(args, "seed", 0) or 0),
        "params": params,
        "outputs": list(outputs),
        "tool_version": __version__,
    }


def write_manifest(args, primary, outputs):
    _write(primary + ".manifest.json", dump_json(manifest_for(args, outputs)))


def argv_from_manifest(m, out_map=None):
    """Rebuild the command line recorded in a manifest."""
    out_map = out_map or {}
    argv = [m["command"]]
    argv += [m["inputs"][name] for name in POSITIONALS[m["command"]]]
    for key, value in m["params"].items():
        flag = "--" + key.replace("_", "-")
        if key in out_map:
            value = out_map[key]
        if value is True:
            argv.append(flag)
        else:
            argv += [flag, str(value)]
    return argv


# commands ----------------------------------------------------------------

def cmd_generate(args):
    model = _load_model(args.model)
    sizes = _int_list(args.fixed_sizes, "fixed sizes") if args.fixed_sizes else None
    try:
        spec = SampleSpec(model, args.n, seed=args.seed, fixed_sizes=sizes)
    except ValueError as err:
        raise CliError(EXIT_INPUT, str(err))
    try:
        s = sample(spec)
    except EmptyClusterError as err:
        raise CliError(EXIT_RESAMPLE, str(err))
    sidecar = args.out + ".json"
    _write(args.out, format_edge_list(s.graph))
    _write(sidecar, dump_json({
        "spec": spec.to_dict(),
        "partition": s.partition.labels.tolist(),
        "block_edge_counts": s.block_edge_counts().tolist(),
        "tool_version": __version__,
    }))
    write_manifest(args, args.out, [args.out, sidecar])
    print(f"seed={args.seed} n={args.n} edges={s.graph.n_edges()} -> {args.out}")
    return 0


def cmd_analyze(args):
    g = _load_graph(args.graph)
    try:
        summary = spectral_summary(g, delta=args.delta, c_thr=args.c_thr)
    except DisconnectedGraphError as err:
        raise CliError(EXIT_DISCONNECTED, f"graph is disconnected: {err}")
    report = {"n": g.n, "k": args.k, "seed": args.seed, "spectra": summary.to_dict(args.top)}
    warnings = []
    kv = {}
    for which in ("plain", "weighted"):
        try:
            with warnings_mod.catch_warnings(record=True) as caught:
                warnings_mod.simplefilter("always")
                value, p = k_variance(g, args.k, which, seed=args.seed)
            warnings.extend(f"{which} k-variance: {w.message}" for w in caught)
            kv[which] = {"value": value, "partition": p.labels.tolist()}
        except ValueError as err:
            kv[which] = None
            warnings.append(f"{which} k-variance: {err}")
    report["k_variances"] = kv
    try:
        report["classification"] = classify_structure(g, args.k, args.delta)
    except (NoStructureError, ValueError) as err:
        report["classification"] = None
        warnings.append(f"classification: {err}")
    report["warnings"] = warnings
    text = dump_json(report)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        _write(args.out, text)
        write_manifest(args, args.out, [args.out])
    else:
        sys.stdout.write(text)
    return 0


def cmd_discrepancy(args):
    g = _load_graph(args.graph)
    if (args.partition is None) == (args.min_k is None):
        raise CliError(EXIT_INPUT, "give exactly one of --partition or --min-k")
    report = {"n": g.n, "mode": args.mode, "seed": args.seed}
    try:
        if args.min_k is not None:
            mode = "exact" if args.mode in ("exact", None) else args.mode
            if mode not in ("exact", "spectral_seeded"):
                raise CliError(EXIT_INPUT, "--min-k supports --mode exact or spectral_seeded")
            res = min_k_discrepancy(g, args.min_k, mode=mode, cap=args.cap, seed=args.seed)
            report.update({"k": args.min_k, "value": res.value, "value_kind": res.kind,
                           "partition": res.partition.labels.tolist(),
                           "result": res.witness.to_dict() if res.witness else None})
        else:
            p = _load_partition(args.partition, g.n)
            report["k"] = p.k
            if args.mode == "exact":
                res = partition_discrepancy_exact(g, p, cap=args.cap)
                report.update(res.to_dict())
            elif args.mode == "heuristic":
                res = partition_discrepancy_heuristic(g, p, seed=args.seed)
                report.update(res.to_dict())
                report["value_kind"] = "lower_bound"
            elif args.mode != "bounds":
                raise CliError(EXIT_INPUT, "--partition supports exact, heuristic or bounds")
            if args.mode in ("heuristic", "bounds"):
                try:
                    b = discrepancy_spectral_bounds(g, p.k, p)
                    report["bounds"] = b.to_dict()
                    if "value" in report:
                        report["bounds"]["slack"] = b.upper - report["value"]
                except DisconnectedGraphError as err:
                    raise CliError(EXIT_DISCONNECTED, f"graph is disconnected: {err}")
    except CapExceededError as err:
        raise CliError(EXIT_CAP, f"{err} (try --mode heuristic or a larger --cap)")
    except BudgetExceededError as err:
        raise CliError(EXIT_CAP, f"{err} (try --mode spectral_seeded)")
    except DisconnectedGraphError as err:
        raise CliError(EXIT_DISCONNECTED, f"graph is disconnected: {err}")
    text = dump_json(report)
    if args.out:
        _write(args.out, text)
        write_manifest(args, args.out, [args.out])
    else:
        sys.stdout.write(text)
    return 0


def _run_property(name, g, k, model, partition, t, seed):
    if name == "PI":
        return check_PI(g, k, t, r=model.r if model else None, seed=seed)
    if name == "PI_plus":
        if model is None:
            return None
        return check_PI_plus(g, k, model, t, seed=seed)
    if name == "PII":
        return check_PII(g, k, t, r=model.r if model else None, seed=seed)
    if name == "PIII":
        return check_PIII(g, partition, t, seed=seed)
    if name == "PIV":
        return check_PIV(g, partition, thresholds=t)
    if name == "P0_proxy":
        if model is None:
            return None
        return check_P0_proxy(g, k, model, t, partition=partition, seed=seed)
    raise AssertionError(name)


def cmd_verify(args):
    from .verify import skipped

    g = _load_graph(args.graph)
    props = [p.strip() for p in args.properties.split(",") if p.strip()]
    bad = [p for p in props if p not in PROPERTIES]
    if bad or not props:
        raise CliError(EXIT_INPUT, f"unknown properties {bad}; choose from {list(PROPERTIES)}")
    model = _load_model(args.model) if args.model else None
    t = Thresholds()
    if args.thresholds:
        if not os.path.exists(args.thresholds):
            raise CliError(EXIT_IO, f"thresholds file not found: {args.thresholds}")
        try:
            t = load_thresholds(args.thresholds)
        except (ValueError, TypeError) as err:
            raise CliError(EXIT_INPUT, f"invalid thresholds: {err}")
    partition = _load_partition(args.partition, g.n) if args.partition else None
    k = args.k or (partition.k if partition else None) or (model.k if model else None)
    if k is None:
        raise CliError(EXIT_INPUT, "cannot determine k: give --k, --partition or --model")
    notes = []
    if partition is None and any(p in ("PIII", "PIV", "P0_proxy") for p in props):
        try:
            _, partition = k_variance(g, k, "weighted" if k > 1 else "plain", seed=args.seed)
            notes.append("no partition given: the weighted k-variance partition was used")
        except (ValueError, DisconnectedGraphError) as err:
            notes.append(f"no partition available: {err}")
    verdicts = []
    for name in props:
        try:
            if partition is None and name in ("PIII", "PIV", "P0_proxy"):
                v = skipped(name, "no partition available")
            else:
                v = _run_property(name, g, k, model, partition, t, args.seed)
                if v is None:
                    v = skipped(name, "needs --model")
        except (DisconnectedGraphError, ValueError, HomBudgetError) as err:
            v = skipped(name, str(err))
        verdicts.append(v)
    first_fail = next((i for i, v in enumerate(verdicts, 1) if v.status == "fail"), None)
    report = {"n": g.n, "k": k, "seed": args.seed, "thresholds": t.to_dict(), "notes": notes,
              "verdicts": [v.to_dict() for v in verdicts],
              "exit_code": 0 if first_fail is None else 10 + first_fail}
    print(f"{'property':<10} {'status':<8}")
    for v in verdicts:
        label = v.property + (" (proxy)" if v.property == "P0_proxy" else "")
        print(f"{label:<10} {v.status:<8}")
    if args.out:
        _write(args.out, dump_json(report))
        write_manifest(args, args.out, [args.out])
    return report["exit_code"]


def _plot(report, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "quasirand"
    fig, ax = plt.subplots(figsize=(4, 3))
    xs = [c[0] for c in report.cells]
    ys = [c[2] for c in report.cells]
    ax.scatter(xs, ys, s=8, alpha=0.5)
    ax.plot(report.sizes, report.means, marker="o")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(report.metric)
    ax.set_title(f"slope {report.slope:.3f}")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_sweep(args):
    model = _load_model(args.model)
    sizes = _int_list(args.sizes, "sizes")
    seeds = _int_list(args.seeds, "seeds")
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if len(set(sizes)) < 3:
        raise CliError(EXIT_INPUT, "a sweep needs at least 3 distinct sizes")
    if not seeds:
        raise CliError(EXIT_INPUT, "empty seed list")
    unknown = [m for m in metrics if m not in RATE_METRICS]
    if unknown or not metrics:
        raise CliError(EXIT_INPUT, f"unknown metrics {unknown}; choose from {sorted(RATE_METRICS)}")
    try:
        reports = rate_sweep(model, sizes, seeds, metrics, jobs=args.jobs)
    except ValueError as err:
        raise CliError(EXIT_INPUT, str(err))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "seed", "metric", "value"])
    for m in metrics:
        for n, s, v in reports[m].cells:
            w.writerow([n, s, m, repr(float(v))])
    _write(args.out_csv, buf.getvalue())
    summary_path = args.out_csv + ".summary.json"
    _write(summary_path, dump_json({"metrics": {m: r.to_dict() for m, r in reports.items()},
                                    "seeds": seeds}))
    outputs = [args.out_csv, summary_path]
    if args.plot:
        for m, r in reports.items():
            path = f"{args.out_csv}.{m}.svg"
            _plot(r, path)
            outputs.append(path)
    write_manifest(args, args.out_csv, outputs)
    for m, r in reports.items():
        print(f"{m}: slope {r.slope:.3f} (target {r.target}) within_band={r.within_band}")
    return 0


def cmd_replay(args):
    m = _read_json(args.manifest, "manifest")
    if not isinstance(m, dict) or m.get("command") not in POSITIONALS:
        raise CliError(EXIT_INPUT, "not a run manifest")
    if not args.compare:
        return main(argv_from_manifest(m))
    out_keys = [k for k in ("out", "out_csv") if k in m["params"]]
    if not out_keys:
        raise CliError(EXIT_INPUT, "manifest records no output file to compare")
    key = out_keys[0]
    original = m["params"][key]
    with tempfile.TemporaryDirectory() as tmp:
        fresh = os.path.join(tmp, os.path.basename(original))
        code = main(argv_from_manifest(m, {key: fresh}))
        if code not in (0,) and m["command"] != "verify":
            return code
        mismatched = []
        for path in m["outputs"]:
            other = fresh + path[len(original):] if path.startswith(original) else None
            if other is None or not os.path.exists(other) or not os.path.exists(path):
                mismatched.append(path)
                continue
            with open(path, "rb") as a, open(other, "rb") as b:
                if a.read() != b.read():
                    mismatched.append(path)
    if mismatched:
        print("replay mismatch: " + ", ".join(mismatched), file=sys.stderr)
        return EXIT_REPLAY
    print("replay identical")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="quasirand", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=_default_jobs())

    p = sub.add_parser("generate", help="sample a graph from a model")
    p.add_argument("model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fixed-sizes")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="spectra, k-variances and structure type")
    p.add_argument("graph")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--c-thr", type=float, default=1.0)
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("discrepancy", help="multiway discrepancy of a partition or md_k")
    p.add_argument("graph")
    p.add_argument("--partition")
    p.add_argument("--min-k", type=int)
    p.add_argument("--mode", choices=["exact", "heuristic", "bounds", "spectral_seeded"],
                   default="exact")
    p.add_argument("--cap", type=int, default=DISCREPANCY_CAP)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_discrepancy)

    p = sub.add_parser("verify", help="check quasirandom properties")
    p.add_argument("graph")
    p.add_argument("--properties", default="PI,PII,PIII,PIV")
    p.add_argument("--model")
    p.add_argument("--partition")
    p.add_argument("--thresholds")
    p.add_argument("--k", type=int)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="rate sweep over sizes and seeds")
    p.add_argument("model")
    p.add_argument("--sizes", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--metrics", default="weighted_kvariance")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--plot", action="store_true")
    common(p, seed=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--compare", action="store_true",
                   help="run into a temporary location and compare bytes with the recorded outputs")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
