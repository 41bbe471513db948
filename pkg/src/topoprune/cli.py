"""Command-line interface.

Every command prints a JSON envelope to stdout. Exit codes: 0 success,
2 invalid input, 3 infeasible pruning schedule.
"""

import argparse
import os
import sys
import warnings

import numpy as np

from .archspec import ArchSpecError, load_arch
from .compression import DenseSpec, eta_tau_network
from .graph import max_spanning_forest, normalize_weights
from .npyio import NpyFormatError, read_npy, write_mask
from .overlap import (
    monte_carlo_overlap,
    overlap_count_for_fraction,
    overlap_lower_bound_sparse,
    random_overlap_pmf,
    random_overlap_tail,
)
from .persistence import (
    neural_persistence,
    normalized_neural_persistence,
    superlevel_filtration,
    total_neural_persistence,
    NpReport,
)
from .pruning import (
    InfeasibleScheduleError,
    build_imp_schedule,
    magnitude_mask,
    measure_overlap,
    run_iterative,
    timp_mask,
)
from .reporting import dumps, make_envelope, write_rows_csv
from .trainer import (
    TrainConfig,
    cross_entropy,
    forward,
    init_dense_net,
    make_desk_dataset,
    save_checkpoint,
    train,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_INVALID):
        self.code = code
        super().__init__(message)


def _emit(args, payload, inputs=(), seed=None):
    envelope = make_envelope(args.command, payload, inputs=inputs, seed=seed)
    print(dumps(envelope, indent=2))


def cmd_eta(args):
    arch, path = load_arch(args.arch)
    report = eta_tau_network(arch, drop_unit_offset=args.drop_unit_offset)
    payload = report.to_dict()
    payload["arch"] = arch.name
    payload["drop_unit_offset"] = args.drop_unit_offset
    if args.csv:
        report.to_csv(args.csv)
    _emit(args, payload, inputs=[path])


def cmd_np(args):
    reports = []
    diagrams = []
    for path in args.weights:
        g = normalize_weights(read_npy(path))
        diagram = superlevel_filtration(g)
        diagrams.append(diagram)
        reports.append(NpReport(
            layer_id=os.path.basename(path),
            raw_np=neural_persistence(diagram, args.p),
            normalized_np=normalized_neural_persistence(diagram, args.p),
            point_count=len(diagram),
        ))
    if args.diagrams:
        os.makedirs(args.diagrams, exist_ok=True)
        for path, diagram in zip(args.weights, diagrams):
            stem = os.path.splitext(os.path.basename(path))[0]
            diagram.to_csv(os.path.join(args.diagrams, f"{stem}_diagram.csv"))
    if args.csv:
        write_rows_csv(args.csv, [r.to_dict() for r in reports])
    payload = {
        "p": args.p,
        "layers": [r.to_dict() for r in reports],
        "total_np": total_neural_persistence(reports),
    }
    _emit(args, payload, inputs=args.weights)


def cmd_mst(args):
    g = normalize_weights(read_npy(args.weights))
    forest = max_spanning_forest(g)
    rows = [{"row": int(r), "col": int(c), "weight": float(w)}
            for r, c, w in zip(forest.rows, forest.cols, forest.weights)]
    if args.out:
        write_rows_csv(args.out, rows, ["row", "col", "weight"])
    if args.diagram:
        superlevel_filtration(g, forest).to_csv(args.diagram)
    payload = {
        "m": g.m,
        "n": g.n,
        "w_max": g.w_max,
        "edge_count": len(forest),
        "components_before": forest.components_before,
        "components_after": forest.components_after,
        "edges": rows,
    }
    _emit(args, payload, inputs=[args.weights])


def cmd_bound(args):
    value = overlap_lower_bound_sparse(args.m, args.n, args.sparsity)
    payload = {"m": args.m, "n": args.n, "sparsity": args.sparsity,
               "alpha": args.m + args.n - 1, "bound": value}
    if args.csv:
        write_rows_csv(args.csv, [payload])
    _emit(args, payload)


def _overlap_w(args, alpha):
    if args.w is not None:
        return args.w
    if args.fraction is not None:
        return overlap_count_for_fraction(args.fraction, alpha)
    raise CliError("one of --w or --fraction is required")


def cmd_pmf_tail(args):
    alpha = args.alpha if args.alpha is not None else args.m + args.n - 1
    w = _overlap_w(args, alpha)
    fn = random_overlap_pmf if args.command == "pmf" else random_overlap_tail
    payload = {"m": args.m, "n": args.n, "alpha": alpha, "w": w,
               "probability": fn(args.m, args.n, alpha, w)}
    if args.csv:
        write_rows_csv(args.csv, [payload])
    _emit(args, payload)


def cmd_simulate(args):
    est = monte_carlo_overlap(args.m, args.n, dist=args.dist, trials=args.trials, seed=args.seed)
    payload = est.to_dict()
    payload["bound"] = overlap_lower_bound_sparse(args.m, args.n, 1.0)
    if args.csv:
        est.to_csv(args.csv)
    _emit(args, payload, seed=args.seed)


def cmd_overlap(args):
    report = measure_overlap(read_npy(args.weights), layer_id=os.path.basename(args.weights))
    if args.csv:
        report.to_csv(args.csv)
    _emit(args, report.to_dict(include_values=args.values), inputs=[args.weights])


def cmd_prune(args):
    W = read_npy(args.weights)
    if args.method == "mp":
        mask = magnitude_mask(W, args.keep)
    else:
        mask = timp_mask(W, args.keep, truncate=args.truncate)
    if args.out:
        write_mask(args.out, mask)
    alpha = len(max_spanning_forest(normalize_weights(W)))
    pruned = mask.apply(W)
    payload = {
        "method": mask.method,
        "shape": list(mask.shape),
        "keep": args.keep,
        "nnz": mask.nnz,
        "alpha": alpha,
        "truncated": bool(args.method == "timp" and args.truncate and args.keep < alpha),
        "np_before": neural_persistence(superlevel_filtration(normalize_weights(W))),
        "np_after": neural_persistence(superlevel_filtration(normalize_weights(pruned))),
    }
    _emit(args, payload, inputs=[args.weights])


def cmd_run(args):
    arch, path = load_arch(args.arch)
    if not all(isinstance(s, DenseSpec) for s in arch.layers):
        raise CliError("run supports dense layers only")
    sizes = [arch.layers[0].in_features]
    for spec in arch.layers:
        if spec.in_features != sizes[-1]:
            raise CliError(f"layer {spec.name or ''} expects {spec.in_features} inputs, got {sizes[-1]}")
        sizes.append(spec.out_features)
    if sizes[-1] < 2:
        raise CliError("the output layer needs at least two classes")

    with warnings.catch_warnings():
        # T-IMP turns infeasibility into an error below; IMP keeps the warning
        if args.loop == "timp":
            warnings.simplefilter("ignore")
        schedule = build_imp_schedule(
            [(s.in_features, s.out_features) for s in arch.layers],
            args.sparsity, args.rounds, args.iters, mode=args.schedule_mode,
        )
    if args.loop == "timp" and not schedule.feasible:
        raise InfeasibleScheduleError(schedule.violations)

    X, y = make_desk_dataset(n_samples=args.samples, n_features=sizes[0], random_state=args.seed)
    y = y % sizes[-1]
    split = int(0.8 * len(X))
    Xtr, ytr, Xva, yva = X[:split], y[:split], X[split:], y[split:]
    net = init_dense_net(sizes, args.activation, seed=args.seed)
    counter = {"round": 0}

    def train_round(masks):
        config = TrainConfig(args.seed + counter["round"], args.lr, args.batch_size, args.iters)
        counter["round"] += 1
        _, losses = train(net, Xtr, ytr, config, masks=masks)
        val = cross_entropy(forward(net, Xva)[0], yva)
        return {"train_loss": float(losses[-1]), "val_loss": val}

    rows = run_iterative(args.loop, lambda: net.weights, schedule, train_round, p=args.p)
    accuracy = float(np.mean(np.argmax(forward(net, Xva)[0], axis=1) == yva))
    if args.csv:
        write_rows_csv(args.csv, rows)
    if args.out_dir:
        save_checkpoint(net, args.out_dir, seed=args.seed)
    payload = {
        "loop": args.loop,
        "arch": arch.name,
        "schedule": schedule.to_dict(),
        "rounds": rows,
        "final_val_accuracy": accuracy,
    }
    _emit(args, payload, inputs=[path], seed=args.seed)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="topoprune",
        description="Zeroth-order topology and topology-preserving pruning of layer weights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eta", help="critical compression ratios of an architecture")
    p.add_argument("--arch", required=True, help="spec JSON path or bundled name (e.g. mnist_fcn)")
    p.add_argument("--drop-unit-offset", "--paper-literal-conv", dest="drop_unit_offset",
                   action="store_true", help="drop the +1 in the convolution output size")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("np", help="neural persistence of layer weight files")
    p.add_argument("--weights", nargs="+", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--diagrams", help="directory for per-layer birth,death CSVs")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_np)

    p = sub.add_parser("mst", help="maximum spanning forest of one layer")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", help="CSV of forest edges")
    p.add_argument("--diagram", help="CSV of the persistence diagram")
    p.set_defaults(func=cmd_mst)

    p = sub.add_parser("bound", help="lower bound on the expected tree/top-alpha overlap")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--sparsity", type=float, default=1.0,
                   help="fraction of non-zero weights (1 = dense)")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bound)

    for name, text in (("pmf", "exactly w"), ("tail", "at least w")):
        p = sub.add_parser(name, help=f"chance that two random alpha-subsets share {text} weights")
        p.add_argument("--m", type=_positive_int, required=True)
        p.add_argument("--n", type=_positive_int, required=True)
        p.add_argument("--alpha", type=_nonneg_int, help="default m + n - 1")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--w", type=_nonneg_int)
        group.add_argument("--fraction", type=float, help="w as a fraction of alpha, rounded down")
        p.add_argument("--csv")
        p.set_defaults(func=cmd_pmf_tail)

    p = sub.add_parser("simulate", help="Monte Carlo overlap on random layers")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--dist", choices=["uniform01", "gaussian-abs"], default="uniform01")
    p.add_argument("--csv", help="per-trial CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("overlap", help="tree/top-alpha overlap of a weight file")
    p.add_argument("--weights", required=True)
    p.add_argument("--values", action="store_true", help="include both weight lists in the JSON")
    p.add_argument("--csv", help="long-format CSV of both weight lists")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("prune", help="magnitude or topology-preserving mask")
    p.add_argument("--weights", required=True)
    p.add_argument("--keep", type=_nonneg_int, required=True)
    p.add_argument("--method", choices=["mp", "timp"], required=True)
    p.add_argument("--truncate", action="store_true",
                   help="timp only: allow keep below the tree size")
    p.add_argument("--out", help="mask NPY path (|u1)")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("run", help="iterative pruning loop on the desk-scale trainer")
    p.add_argument("--loop", choices=["imp", "timp"], required=True)
    p.add_argument("--arch", required=True)
    p.add_argument("--sparsity", type=float, required=True, help="target percent removed")
    p.add_argument("--rounds", type=_positive_int, required=True)
    p.add_argument("--iters", type=_positive_int, required=True)
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=_positive_int, default=32)
    p.add_argument("--samples", type=_positive_int, default=600)
    p.add_argument("--activation", choices=["relu", "tanh"], default="relu")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--schedule-mode", choices=["original", "remaining"], default="original")
    p.add_argument("--csv", help="per-round per-layer metrics CSV")
    p.add_argument("--out-dir", help="checkpoint directory for the final network")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InfeasibleScheduleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, TypeError, ArchSpecError, NpyFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
