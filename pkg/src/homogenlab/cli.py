"""Command-line entry point: reproducible, seeded experiments with CSV and
network-JSON artifacts.

Exit codes: 0 success, 1 rejected input (one machine-readable error line on
stderr), 2 iteration cap reached without convergence.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds, experiments, homogenize, network, solvers
from .experiments import (
    format_cell,
    gaussian_matrix,
    read_matrix_csv,
    render_csv,
    write_csv,
    write_matrix_csv,
)
from .numerics import matrix_norm


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; rejected input must exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {text!r}") from exc


def _load_net(path) -> network.NetworkSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return network.deserialize(fh.read())


def _save_net(path, net: network.NetworkSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(network.serialize(net))


def _matrix_from_args(args, rows_flag="gaussian_m", cols_flag="gaussian_n", normalize=True):
    if args.infile:
        return read_matrix_csv(args.infile)
    rows = getattr(args, rows_flag)
    cols = getattr(args, cols_flag)
    if rows is None or cols is None:
        raise ValueError("provide --in or both --gaussian-m and --gaussian-n")
    if args.seed is None:
        raise ValueError("--seed is required when generating a matrix")
    return gaussian_matrix(np.random.default_rng([args.seed, 0]), rows, cols, normalize)


def _fit_config(args, width=None) -> homogenize.FitConfig:
    return homogenize.FitConfig(
        width=width if width is not None else args.width,
        learning_rate=args.learning_rate,
        steps=args.steps,
        restarts=args.restarts,
        seed=args.seed,
        target_mse=args.target_mse,
    )


def _add_fit_flags(p, width_default=128):
    if width_default is not None:
        p.add_argument("--width", type=int, default=width_default)
    p.add_argument("--learning-rate", type=float, default=0.4)
    p.add_argument("--steps", type=int, default=6000)
    p.add_argument("--restarts", type=int, default=2)
    p.add_argument("--target-mse", type=float, default=2e-5)


def build_parser() -> _Parser:
    parser = _Parser(prog="homogenlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("homogenize", help="lift a one-hidden-layer net to a scale-invariant two-hidden-layer net")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("convert-activation", help="rewrite a bias-free relu net over alpha relu(x) + beta relu(-x)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pad", help="deepen a bias-free relu net with identity gadget layers")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("probe-homogeneity", help="measure the worst scaling defect of a network file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--scales", type=_floats, default=list(network.DEFAULT_PROBE_SCALES))
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.add_argument("--out")

    p = sub.add_parser("lower-bound", help="one-hidden-layer reconstruction error floor for a direction set")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--identity-n", type=int)
    p.add_argument("--in", dest="infile", help="CSV matrix whose columns are unit directions")

    p = sub.add_parser("uat-negative", help="hard-instance bound or matrix for one-hidden-layer approximation")
    p.add_argument("--n", type=int)
    p.add_argument("--w", type=_floats, help="pairwise distinct slopes for the 2 x n matrix")
    p.add_argument("--out")

    p = sub.add_parser("rip", help="exhaustive restricted-isometry constants")
    p.add_argument("--in", dest="infile")
    p.add_argument("--gaussian-m", type=int)
    p.add_argument("--gaussian-n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--cap", type=int, default=bounds.DEFAULT_SUPPORT_CAP)
    p.add_argument("--save-matrix")
    p.add_argument("--out")

    p = sub.add_parser("conditioning", help="sampled expansion/contraction estimates of x -> A x on sparse signals")
    p.add_argument("--in", dest="infile")
    p.add_argument("--gaussian-m", type=int)
    p.add_argument("--gaussian-n", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sparsity", type=int, default=1)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--norm-ii", choices=bounds.CONDITIONING_NORMS, default="l1")
    p.add_argument("--out")

    p = sub.add_parser("lowrank-rip", help="sampled isometry interval of the quadratic measurement map")
    p.add_argument("--in", dest="infile")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("solve", help="run one of the four l1 recovery programs")
    p.add_argument("--variant", choices=solvers.VARIANTS, required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--y", type=_floats, required=True)
    p.add_argument("--eta", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("ista", help="shrinkage-thresholding trajectory")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--y", type=_floats, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--step-bound", type=float, help="default: squared spectral norm")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("lista", help="evaluate the unrolled shrinkage network")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--y", type=_floats, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--step-bound", type=float)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("brute-force", help="exhaustive sparse least squares")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--y", type=_floats, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--cap", type=int, default=solvers.DEFAULT_SUPPORT_CAP)

    p = sub.add_parser("robustness", help="perturbation-gain scan of a network file")
    p.add_argument("--net", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--x", type=_floats, required=True)
    p.add_argument("--levels", type=_floats, required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("counterexample", help="exact minimizer of the scalar selection problem")
    p.add_argument("--y2", type=float, required=True)

    p = sub.add_parser("impossibility-experiment", help="trained one-hidden-layer nets against the error floor")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--widths", type=_ints, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_fit_flags(p, width_default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("recovery-experiment", help="two-hidden-layer recovery net error table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise", type=_floats, default=[1e-3, 1e-2, 1e-1])
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--signals", type=int)
    p.add_argument("--densify", type=int, default=96)
    _add_fit_flags(p)
    p.add_argument("--save-net")
    p.add_argument("--save-curves", help="per-coordinate training curves as CSV")
    p.add_argument("--out", required=True)

    return parser


def _print_or_write(args, command, config, header, rows):
    if getattr(args, "out", None):
        write_csv(args.out, command, config, header, rows)
    else:
        sys.stdout.write(render_csv(command, config, header, rows))


def _cmd_homogenize(args):
    _save_net(args.out, homogenize.homogenize_one_layer(_load_net(args.infile)))
    return 0


def _cmd_convert(args):
    net = network.convert_relu_to_activation(_load_net(args.infile), args.alpha, args.beta)
    _save_net(args.out, net)
    return 0


def _cmd_pad(args):
    _save_net(args.out, network.pad_identity_layers(_load_net(args.infile), args.depth))
    return 0


def _cmd_probe(args):
    net = _load_net(args.infile)
    probe = network.ProbeConfig(
        seed=args.seed,
        num_points=args.points,
        scales=tuple(args.scales),
        tolerance=args.tolerance,
    )
    report = network.check_positive_homogeneity(net, net.input_dim, probe)
    config = {
        "in": args.infile,
        "seed": args.seed,
        "points": args.points,
        "scales": ";".join(format_cell(s) for s in probe.scales),
        "tolerance": args.tolerance,
    }
    rows = [(report.max_defect, report.worst_scale, report.samples, report.passed)]
    if args.out:
        write_csv(args.out, "probe-homogeneity", config, ("max_defect", "worst_scale", "samples", "passed"), rows)
    print(
        f"max_defect={format_cell(report.max_defect)} worst_scale={format_cell(report.worst_scale)} "
        f"samples={report.samples} passed={str(report.passed).lower()}"
    )
    return 0


def _cmd_lower_bound(args):
    if (args.identity_n is None) == (args.infile is None):
        raise ValueError("provide exactly one of --identity-n or --in")
    if args.identity_n is not None:
        directions = bounds.DirectionSet.identity(args.identity_n)
    else:
        directions = bounds.DirectionSet(read_matrix_csv(args.infile))
    print(f"{bounds.one_layer_lower_bound(args.m, directions):.8f}")
    return 0


def _cmd_uat_negative(args):
    if (args.n is None) == (args.w is None):
        raise ValueError("provide exactly one of --n or --w")
    if args.n is not None:
        print(f"{bounds.uat_negative_bound(args.n):.8f}")
        return 0
    matrix = bounds.uat_negative_matrix(np.array(args.w))
    config = {"w": ";".join(format_cell(v) for v in args.w)}
    if args.out:
        write_matrix_csv(args.out, matrix, "uat-negative", config)
    else:
        for row in matrix:
            print(",".join(format_cell(v) for v in row))
    return 0


def _cmd_rip(args):
    a = _matrix_from_args(args)
    report = bounds.rip_exhaustive(a, args.order, args.cap)
    config = {
        "in": args.infile or "",
        "gaussian_m": args.gaussian_m or "",
        "gaussian_n": args.gaussian_n or "",
        "seed": "" if args.seed is None else args.seed,
        "order": args.order,
        "cap": args.cap,
    }
    if args.save_matrix:
        write_matrix_csv(args.save_matrix, a, "rip", config)
    rows = [(report.order, report.delta, report.delta_lb, report.delta_ub, report.supports_checked)]
    if args.out:
        write_csv(args.out, "rip", config, ("order", "delta", "delta_lb", "delta_ub", "supports_checked"), rows)
    print(
        f"delta={format_cell(report.delta)} delta_lb={format_cell(report.delta_lb)} "
        f"delta_ub={format_cell(report.delta_ub)} supports={report.supports_checked}"
    )
    return 0


def _cmd_conditioning(args):
    a = _matrix_from_args(args)
    n = a.shape[1]
    sampler = experiments.sparse_signal_sampler(n, args.sparsity, cycle_basis=False)
    report = bounds.empirical_conditioning(
        lambda x: a @ x, sampler, args.pairs, args.norm_ii, args.seed
    )
    config = {
        "in": args.infile or "",
        "gaussian_m": args.gaussian_m or "",
        "gaussian_n": args.gaussian_n or "",
        "seed": args.seed,
        "sparsity": args.sparsity,
        "pairs": args.pairs,
        "norm_ii": args.norm_ii,
    }
    rows = [(report.tau_hat, report.rho_hat, report.pairs_sampled, report.norm_ii_tag, report.norm_equiv_M)]
    if args.out:
        write_csv(args.out, "conditioning", config, ("tau_hat", "rho_hat", "pairs_sampled", "norm_ii", "norm_equiv_M"), rows)
    print(
        f"tau_hat={format_cell(report.tau_hat)} rho_hat={format_cell(report.rho_hat)} "
        f"pairs={report.pairs_sampled} norm_equiv_M={format_cell(report.norm_equiv_M)}"
    )
    return 0


def _cmd_lowrank_rip(args):
    if args.infile:
        a = read_matrix_csv(args.infile)
    else:
        if args.m is None or args.n is None:
            raise ValueError("provide --in or both --m and --n")
        # unit-variance entries; the 1/m normalization lives in the sampled map
        a = np.random.default_rng([args.seed, 0]).standard_normal((args.m, args.n))
    lb, ub = bounds.lowrank_rip_sample(a, args.rank, args.samples, args.seed)
    config = {
        "in": args.infile or "",
        "m": args.m or "",
        "n": args.n or "",
        "rank": args.rank,
        "samples": args.samples,
        "seed": args.seed,
    }
    if args.out:
        write_csv(args.out, "lowrank-rip", config, ("delta_lb_hat", "delta_ub_hat"), [(lb, ub)])
    print(f"delta_lb_hat={format_cell(lb)} delta_ub_hat={format_cell(ub)}")
    return 0


def _cmd_solve(args):
    a = read_matrix_csv(args.infile)
    y = np.array(args.y)
    if args.variant == "qcbp":
        if args.eta is None:
            raise ValueError("qcbp needs --eta")
        problem = solvers.qcbp(a, y, args.eta)
    elif args.variant == "bpdn":
        if args.lam is None:
            raise ValueError("bpdn needs --lam")
        problem = solvers.bpdn(a, y, args.lam)
    elif args.variant == "lasso":
        if args.tau is None:
            raise ValueError("lasso needs --tau")
        problem = solvers.lasso(a, y, args.tau)
    else:
        if args.eta is None:
            raise ValueError("dantzig needs --eta")
        problem = solvers.dantzig(a, y, args.eta)
    report = solvers.solve(
        problem, solvers.SolveConfig(max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    )
    config = {
        "variant": args.variant,
        "in": args.infile,
        "y": ";".join(format_cell(v) for v in y),
        "eta": "" if args.eta is None else args.eta,
        "lam": "" if args.lam is None else args.lam,
        "tau": "" if args.tau is None else args.tau,
        "tol": args.tol,
        "max_iters": args.max_iters,
        "seed": args.seed,
    }
    header = ("objective", "primal_residual", "dual_residual", "iterations", "converged", "multiplicity_hint") + tuple(
        f"z{i}" for i in range(report.solution.size)
    )
    rows = [
        (
            report.objective,
            report.primal_residual,
            report.dual_residual,
            report.iterations,
            report.converged,
            report.multiplicity_hint,
        )
        + tuple(report.solution)
    ]
    if args.out:
        write_csv(args.out, "solve", config, header, rows)
    print(
        f"solution={','.join(format_cell(v) for v in report.solution)} "
        f"objective={format_cell(report.objective)} iterations={report.iterations} "
        f"converged={str(report.converged).lower()} multiplicity={str(report.multiplicity_hint).lower()}"
    )
    if not report.converged:
        return 2
    return 0


def _cmd_ista(args):
    a = read_matrix_csv(args.infile)
    y = np.array(args.y)
    step_bound = args.step_bound
    if step_bound is None:
        step_bound = matrix_norm(a, "spectral") ** 2
    trajectory = solvers.ista_run(a, y, args.lam, step_bound, args.iters)
    config = {
        "in": args.infile,
        "y": ";".join(format_cell(v) for v in y),
        "lam": args.lam,
        "step_bound": step_bound,
        "iters": args.iters,
    }
    header = ("step", "objective") + tuple(f"z{i}" for i in range(trajectory.shape[1]))
    rows = [
        (k, solvers.ista_objective(a, y, args.lam, trajectory[k])) + tuple(trajectory[k])
        for k in range(trajectory.shape[0])
    ]
    _print_or_write(args, "ista", config, header, rows)
    return 0


def _cmd_lista(args):
    a = read_matrix_csv(args.infile)
    y = np.array(args.y)
    step_bound = args.step_bound
    if step_bound is None:
        step_bound = matrix_norm(a, "spectral") ** 2
    net = solvers.lista_from_ista(a, args.lam, step_bound, args.depth)
    final = solvers.lista_eval(net, y, np.zeros(a.shape[1]))
    config = {
        "in": args.infile,
        "y": ";".join(format_cell(v) for v in y),
        "lam": args.lam,
        "step_bound": step_bound,
        "depth": args.depth,
    }
    header = tuple(f"z{i}" for i in range(final.size))
    _print_or_write(args, "lista", config, header, [tuple(final)])
    return 0


def _cmd_brute_force(args):
    a = read_matrix_csv(args.infile)
    support, coeffs, residual = solvers.brute_force_sparse_fit(a, np.array(args.y), args.s, args.cap)
    print(
        f"support={','.join(str(i) for i in support)} "
        f"coefficients={','.join(format_cell(v) for v in coeffs)} "
        f"residual={format_cell(residual)}"
    )
    return 0


def _cmd_robustness(args):
    net = _load_net(args.net)
    a = read_matrix_csv(args.infile)
    rows = solvers.robustness_scan(net, a, np.array(args.x), args.levels, args.trials, args.seed)
    config = {
        "net": args.net,
        "in": args.infile,
        "x": ";".join(format_cell(v) for v in args.x),
        "levels": ";".join(format_cell(v) for v in args.levels),
        "trials": args.trials,
        "seed": args.seed,
    }
    _print_or_write(args, "robustness", config, ("noise_level", "trial", "ratio"), rows)
    return 0


def _cmd_counterexample(args):
    z1, multiple = solvers.selection_discontinuity_demo(args.y2)
    if multiple:
        print(f"z1 = {format_cell(z1)} (minimizer not unique)")
    else:
        print(f"z1 = {format_cell(z1)}")
    return 0


def _cmd_impossibility(args):
    fit = _fit_config(args, width=1)
    a, rows = experiments.impossibility_experiment(args.m, args.n, args.widths, fit)
    config = {
        "m": args.m,
        "n": args.n,
        "widths": ";".join(str(w) for w in args.widths),
        "seed": args.seed,
        "learning_rate": args.learning_rate,
        "steps": args.steps,
        "restarts": args.restarts,
        "target_mse": args.target_mse,
    }
    write_csv(args.out, "impossibility-experiment", config, experiments.IMPOSSIBILITY_HEADER, rows)
    return 0


def _cmd_recovery(args):
    fit = _fit_config(args)
    curves = {} if args.save_curves else None
    a, net, rip, rows = experiments.recovery_experiment(
        args.n,
        args.m,
        args.s,
        fit,
        args.noise,
        trials=args.trials,
        num_signals=args.signals,
        densify_points=args.densify,
        curves=curves,
    )
    config = {
        "n": args.n,
        "m": args.m,
        "s": args.s,
        "seed": args.seed,
        "noise": ";".join(format_cell(v) for v in args.noise),
        "trials": args.trials,
        "signals": args.signals or "",
        "densify": args.densify,
        "width": args.width,
        "learning_rate": args.learning_rate,
        "steps": args.steps,
        "restarts": args.restarts,
        "target_mse": args.target_mse,
        "rip_delta": rip.delta,
    }
    if args.save_net:
        _save_net(args.save_net, net)
    if args.save_curves:
        curve_rows = [
            (coord, restart, step, mse)
            for coord in sorted(curves)
            for restart, step, mse in curves[coord]
        ]
        write_csv(
            args.save_curves,
            "recovery-experiment",
            config,
            ("coordinate", "restart", "step", "mse"),
            curve_rows,
        )
    write_csv(args.out, "recovery-experiment", config, experiments.RECOVERY_HEADER, rows)
    return 0


_HANDLERS = {
    "homogenize": _cmd_homogenize,
    "convert-activation": _cmd_convert,
    "pad": _cmd_pad,
    "probe-homogeneity": _cmd_probe,
    "lower-bound": _cmd_lower_bound,
    "uat-negative": _cmd_uat_negative,
    "rip": _cmd_rip,
    "conditioning": _cmd_conditioning,
    "lowrank-rip": _cmd_lowrank_rip,
    "solve": _cmd_solve,
    "ista": _cmd_ista,
    "lista": _cmd_lista,
    "brute-force": _cmd_brute_force,
    "robustness": _cmd_robustness,
    "counterexample": _cmd_counterexample,
    "impossibility-experiment": _cmd_impossibility,
    "recovery-experiment": _cmd_recovery,
}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return 0 if exc.code in (None, 0) else 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
