"""Seeded experiment drivers and CSV artifact helpers for the command line.

Every artifact starts with a comment line recording the full configuration so
a run can be reproduced; identical configurations produce byte-identical
files. Floats are printed with 17 significant digits.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from .bounds import DirectionSet, one_layer_lower_bound, rip_exhaustive
from .homogenize import FitConfig, build_inverse_recovery_net, fit_regression
from .network import NetworkSpec, evaluate

THREADS_ENV_VAR = "HOMOGENLAB_THREADS"


def worker_count() -> int:
    """Worker cap: HOMOGENLAB_THREADS if set, else machine parallelism."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
        if value < 1:
            raise ValueError(f"{THREADS_ENV_VAR} must be at least 1, got {value}")
        return value
    return os.cpu_count() or 1


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def config_line(command: str, config: dict) -> str:
    parts = [f"command={command}"] + [f"{k}={format_cell(v)}" for k, v in config.items()]
    return "# " + " ".join(parts)


def render_csv(command: str, config: dict, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [config_line(command, config), ",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def write_csv(path, command: str, config: dict, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_csv(command, config, header, rows))


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(cell) for cell in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: no numeric rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.float64)


def write_matrix_csv(path, m: np.ndarray, command: str, config: dict) -> None:
    lines = [config_line(command, config)]
    for row in np.atleast_2d(m):
        lines.append(",".join(format_cell(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def gaussian_matrix(rng: np.random.Generator, rows: int, cols: int, normalize_columns: bool = True) -> np.ndarray:
    """Measurement matrix with N(0, 1/rows) entries; columns rescaled to unit
    l2 by default, which keeps exhaustive isometry constants usable at desk
    scale."""
    a = rng.standard_normal((rows, cols)) / np.sqrt(rows)
    if normalize_columns:
        a = a / np.linalg.norm(a, axis=0, keepdims=True)
    return a


def sparse_signal_sampler(n: int, s: int, cycle_basis: bool | None = None):
    """Seeded generator of unit-norm s-sparse signals.

    With ``cycle_basis`` (the default for s = 1) the signed standard basis
    vectors are cycled deterministically, so repeated draws weight a training
    set evenly; otherwise supports and values come from the generator that is
    passed in.
    """
    if not 1 <= s <= n:
        raise ValueError(f"sparsity {s} out of range [1, {n}]")
    if cycle_basis is None:
        cycle_basis = s == 1
    if cycle_basis and s != 1:
        raise ValueError("basis cycling only makes sense for 1-sparse signals")
    state = {"i": 0}

    def sampler(rng: np.random.Generator) -> np.ndarray:
        x = np.zeros(n)
        if cycle_basis:
            i = state["i"]
            state["i"] += 1
            x[(i // 2) % n] = 1.0 if i % 2 == 0 else -1.0
            return x
        support = np.sort(rng.choice(n, size=s, replace=False))
        vals = rng.standard_normal(s)
        vals /= np.linalg.norm(vals)
        x[support] = vals
        return x

    return sampler


def _signed_basis(n: int) -> list[np.ndarray]:
    out = []
    for j in range(n):
        for sign in (1.0, -1.0):
            x = np.zeros(n)
            x[j] = sign
            out.append(x)
    return out


def max_signed_basis_error(net: NetworkSpec, a: np.ndarray) -> float:
    """Largest l2 reconstruction error of net(A x) over the signed unit
    1-sparse vectors (equals the worst relative error for scale-invariant
    nets)."""
    return max(float(np.linalg.norm(evaluate(net, a @ x) - x)) for x in _signed_basis(a.shape[1]))


IMPOSSIBILITY_HEADER = ("width", "max_rel_error", "lower_bound", "train_mse", "fit_ok")


def impossibility_experiment(
    m: int, n: int, widths: Sequence[int], fit: FitConfig
) -> tuple[np.ndarray, list[tuple]]:
    """Train one bias-free one-hidden-layer net per width to invert a seeded
    Gaussian map on 1-sparse signals and record its worst error over the
    signed basis next to the error floor sqrt(1 - m/n).

    Failed fits are flagged in the row, never dropped. m = n is allowed and
    produces degenerate rows with floor 0. Returns the matrix and the result
    rows.
    """
    if not 0 < m <= n:
        raise ValueError(f"need 0 < m <= n, got m={m}, n={n}")
    widths = [int(w) for w in widths]
    if any(w < 1 for w in widths):
        raise ValueError("widths must be at least 1")
    a = gaussian_matrix(np.random.default_rng([fit.seed, 0]), m, n)
    bound = one_layer_lower_bound(m, DirectionSet.identity(n))
    signals = _signed_basis(n)
    targets = np.array(signals)
    inputs = targets @ a.T

    def run(item):
        idx, width = item
        cfg = dataclasses.replace(fit, width=width, seed=fit.seed * 1_000_003 + idx)
        try:
            net, mse = fit_regression(inputs, targets, cfg, unbiased=True)
        except ValueError:
            return (width, float("nan"), bound, float("nan"), False)
        err = max_signed_basis_error(net, a)
        return (width, err, bound, mse, np.isfinite(err))

    with ThreadPoolExecutor(max_workers=min(worker_count(), len(widths))) as pool:
        rows = list(pool.map(run, enumerate(widths)))
    return a, rows


RECOVERY_HEADER = ("case", "index", "norm_x", "sparse_tail_l1", "norm_e", "error")


def sparse_tail_l1(x: np.ndarray, s: int) -> float:
    """l1 distance of x to the set of s-sparse vectors (sum of all but the s
    largest magnitudes)."""
    mags = np.sort(np.abs(x))[::-1]
    return float(mags[s:].sum())


def recovery_experiment(
    n: int,
    m: int,
    s: int,
    fit: FitConfig,
    noise_levels: Sequence[float],
    trials: int = 8,
    num_signals: int | None = None,
    densify_points: int = 96,
    rip_threshold: float = 1.0,
    curves: dict[int, list] | None = None,
) -> tuple[np.ndarray, NetworkSpec, "object", list[tuple]]:
    """Build the two-hidden-layer recovery net for a seeded Gaussian map and
    tabulate its errors on exactly sparse, approximately sparse, and noisy
    inputs.

    The isometry constant of order min(2s, n) is verified exhaustively before
    any training; the run is rejected when it reaches ``rip_threshold``.
    Returns (matrix, net, rip report, rows).
    """
    levels = [float(v) for v in noise_levels]
    if any(v <= 0 for v in levels):
        raise ValueError("noise levels must be strictly positive")
    if trials < 1:
        raise ValueError("need at least one trial per noise level")
    a = gaussian_matrix(np.random.default_rng([fit.seed, 0]), m, n)
    rip = rip_exhaustive(a, min(2 * s, n))
    if rip.delta >= rip_threshold:
        raise ValueError(
            f"RIP check failed: delta_{min(2 * s, n)} = {rip.delta:.6f} >= {rip_threshold}"
        )
    if num_signals is None:
        num_signals = 10 * n if s == 1 else 12 * n
    net = build_inverse_recovery_net(
        a,
        sparse_signal_sampler(n, s),
        fit,
        num_signals=num_signals,
        densify_points=densify_points,
        curves=curves,
    )

    rows = []
    zero_err = float(np.linalg.norm(evaluate(net, np.zeros(m))))
    rows.append(("zero", 0, 0.0, 0.0, 0.0, zero_err))
    exact_cases = _signed_basis(n) if s == 1 else []
    if s != 1:
        rng_cases = np.random.default_rng([fit.seed, 7])
        sampler = sparse_signal_sampler(n, s)
        exact_cases = [sampler(rng_cases) for _ in range(2 * n)]
    for idx, x in enumerate(exact_cases):
        err = float(np.linalg.norm(evaluate(net, a @ x) - x))
        rows.append(("exact", idx, float(np.linalg.norm(x)), sparse_tail_l1(x, s), 0.0, err))

    rng = np.random.default_rng([fit.seed, 8])
    for idx in range(trials):
        x = exact_cases[idx % len(exact_cases)] + 0.1 * rng.standard_normal(n)
        err = float(np.linalg.norm(evaluate(net, a @ x) - x))
        rows.append(
            ("approx", idx, float(np.linalg.norm(x)), sparse_tail_l1(x, s), 0.0, err)
        )

    rng_noise = np.random.default_rng([fit.seed, 9])
    idx = 0
    for level in levels:
        for _ in range(trials):
            x = exact_cases[idx % len(exact_cases)]
            direction = rng_noise.standard_normal(m)
            e = direction * (level / float(np.linalg.norm(direction)))
            err = float(np.linalg.norm(evaluate(net, a @ x + e) - x))
            rows.append(
                ("noisy", idx, float(np.linalg.norm(x)), sparse_tail_l1(x, s), level, err)
            )
            idx += 1
    return a, net, rip, rows
