"""Exact scale-invariant lifting of one-hidden-layer approximators and the
full inverse-recovery pipeline built on it.

``homogenize_one_layer`` turns any (possibly biased) one-hidden-layer relu
network g into a bias-free two-hidden-layer relu network computing
``||x||_1 * g(x / ||x||_1)`` (and 0 at 0), which is scale invariant by
construction. The pipeline samples an inverse map on the l1 sphere of the
measurement space, densifies it with a Lipschitz inf-extension, fits a
one-hidden-layer net per output coordinate, and lifts the result.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .network import ActivationSpec, LayerSpec, NetworkSpec, unbiased_relu_net
from .numerics import as_matrix, as_vector

SPHERE_NORM_TAGS = ("l1", "l2")

#: Direction norms must sit within this distance of 1 in a SphereSampleSet.
SPHERE_TOL = 1e-12


@dataclass(frozen=True)
class SphereSampleSet:
    """Sampled values of a map on the unit sphere of the tagged norm.

    ``directions`` has one unit-norm row per sample; ``values`` holds the
    corresponding outputs (1-D for scalar targets, else one row per sample).
    """

    directions: np.ndarray
    values: np.ndarray
    norm_tag: str

    def __post_init__(self):
        d = as_matrix(self.directions, "directions")
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        v = as_matrix(v, "values")
        if self.norm_tag not in SPHERE_NORM_TAGS:
            raise ValueError(f"unknown norm tag {self.norm_tag!r}; expected one of {SPHERE_NORM_TAGS}")
        if d.shape[0] == 0:
            raise ValueError("sample set must be non-empty")
        if v.shape[0] != d.shape[0]:
            raise ValueError(f"{v.shape[0]} values for {d.shape[0]} directions")
        norms = (
            np.abs(d).sum(axis=1) if self.norm_tag == "l1" else np.linalg.norm(d, axis=1)
        )
        off = np.abs(norms - 1.0)
        if np.any(off > SPHERE_TOL):
            worst = int(np.argmax(off))
            raise ValueError(
                f"directions[{worst}] has {self.norm_tag} norm {norms[worst]!r}, expected 1"
            )
        d.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True)
class FitConfig:
    """Full-batch gradient-descent settings for the one-hidden-layer fitter."""

    width: int
    learning_rate: float
    steps: int
    restarts: int
    seed: int
    target_mse: float = 0.0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("width must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.target_mse < 0:
            raise ValueError("target mse must be non-negative")


def sample_l1_sphere(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """Draw points on the l1 unit sphere: Dirichlet magnitudes over the
    coordinates, independent random signs. Covers all faces."""
    mags = rng.dirichlet(np.ones(dim), size=count)
    signs = rng.integers(0, 2, size=(count, dim)) * 2 - 1
    return mags * signs


def homogenize_one_layer(g: NetworkSpec) -> NetworkSpec:
    """Lift a one-hidden-layer relu network g (biases allowed) to a bias-free
    two-hidden-layer relu network f with f(x) = ||x||_1 * g(x / ||x||_1) for
    x != 0 and f(0) = 0.

    Structure: first hidden layer [I; -I] of width 2m; per output coordinate a
    second hidden block of width k+1 (the k lifted hidden rows plus one row
    computing ||x||_1), stacked for multiple outputs with the first layer
    shared.
    """
    if g.depth != 1:
        raise ValueError(f"expected exactly one hidden layer, got depth {g.depth}")
    if not g.activation.is_plain_relu:
        raise ValueError("homogenization requires relu activation")
    w1 = g.layers[0].weights
    k, m = w1.shape
    b1 = g.layers[0].bias if g.layers[0].bias is not None else np.zeros(k)
    w2 = g.layers[1].weights
    p = w2.shape[0]
    b2 = g.layers[1].bias if g.layers[1].bias is not None else np.zeros(p)

    eye = np.eye(m)
    first = np.vstack([eye, -eye])  # (2m, m)

    # Applied to (relu(x); relu(-x)) this block yields (W1 x + ||x||_1 b1; ||x||_1).
    ones = np.ones((1, m))
    block = np.vstack(
        [np.hstack([w1 + b1[:, None] @ ones, -w1 + b1[:, None] @ ones]), np.hstack([ones, ones])]
    )  # (k + 1, 2m)

    second = np.vstack([block] * p)  # (p (k + 1), 2m)
    final = np.zeros((p, p * (k + 1)))
    for j in range(p):
        final[j, j * (k + 1) : (j + 1) * (k + 1)] = np.concatenate([w2[j], [b2[j]]])
    return unbiased_relu_net([first, second, final])


def radial_extend_l2(f_on_sphere: Callable) -> Callable:
    """Extend a map defined on the l2 unit sphere to all of R^n by
    f(x) = ||x||_2 * f(x / ||x||_2), with f(0) = 0.

    The extension is scale invariant by construction; if the sphere map is
    L-Lipschitz the extension is 2L-Lipschitz.
    """

    def extended(x):
        x = as_vector(x, "point")
        r = float(np.linalg.norm(x))
        if r == 0.0:
            probe = np.zeros(x.size)
            probe[0] = 1.0
            return 0.0 * np.asarray(f_on_sphere(probe), dtype=np.float64)
        return r * np.asarray(f_on_sphere(x / r), dtype=np.float64)

    return extended


def mcshane_extend(points, values, lipschitz: float) -> Callable:
    """Constructive Lipschitz extension of sampled values
    f_j(x) = min_i (v_i)_j + L ||x - u_i||_2 (per output coordinate).

    Samples must be consistent per coordinate,
    |(v_i)_j - (v_k)_j| <= L ||u_i - u_k||_2; inconsistent data is rejected
    naming the violating pair. Each coordinate of the extension is
    L-Lipschitz, so the vector map is sqrt(p) L-Lipschitz for p outputs.
    """
    if lipschitz <= 0:
        raise ValueError("Lipschitz constant must be positive")
    u = np.asarray(points, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    u = as_matrix(u, "points")
    v = np.asarray(values, dtype=np.float64)
    scalar_out = v.ndim == 1
    if scalar_out:
        v = v[:, None]
    v = as_matrix(v, "values")
    if v.shape[0] != u.shape[0]:
        raise ValueError(f"{v.shape[0]} values for {u.shape[0]} points")

    dists = np.linalg.norm(u[:, None, :] - u[None, :, :], axis=2)
    gaps = np.abs(v[:, None, :] - v[None, :, :]).max(axis=2)
    bad = gaps > lipschitz * dists + 1e-12
    if bad.any():
        i, k = np.argwhere(bad)[0]
        raise ValueError(
            f"samples {i} and {k} are inconsistent with Lipschitz constant "
            f"{lipschitz}: value gap {gaps[i, k]} over distance {dists[i, k]}"
        )

    def extended(x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        d = np.linalg.norm(u - x[None, :], axis=1)
        out = np.min(v + lipschitz * d[:, None], axis=0)
        return float(out[0]) if scalar_out else out

    return extended


def minimal_consistent_lipschitz(points, values) -> float:
    """Smallest per-coordinate Lipschitz constant under which the samples are
    mutually consistent (0 for a single sample)."""
    u = as_matrix(np.atleast_2d(np.asarray(points, dtype=np.float64)), "points")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    dists = np.linalg.norm(u[:, None, :] - u[None, :, :], axis=2)
    gaps = np.abs(v[:, None, :] - v[None, :, :]).max(axis=2)
    mask = dists > 0
    if not mask.any():
        return 0.0
    return float(np.max(gaps[mask] / dists[mask]))


def _init_params(rng, width, in_dim, out_dim, unbiased):
    w1 = rng.standard_normal((width, in_dim)) / np.sqrt(in_dim)
    w2 = rng.standard_normal((out_dim, width)) / np.sqrt(width)
    if unbiased:
        return w1, None, w2, None
    b1 = 0.1 * rng.standard_normal(width)
    b2 = np.zeros(out_dim)
    return w1, b1, w2, b2


def fit_regression(
    inputs, targets, config: FitConfig, unbiased: bool = False, curve: list | None = None
) -> tuple[NetworkSpec, float]:
    """Fit a one-hidden-layer relu network to (input, target) rows by seeded
    full-batch gradient descent with restarts.

    Returns the best restart by (mse, restart index); deterministic given the
    config seed. ``unbiased=True`` pins all biases to zero so the fitted net
    is scale invariant. Pass a list as ``curve`` to collect
    (restart, step, mse) training-curve rows.
    """
    u = as_matrix(np.atleast_2d(np.asarray(inputs, dtype=np.float64)), "inputs")
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim == 1:
        t = t[:, None]
    t = as_matrix(t, "targets")
    if u.shape[0] == 0:
        raise ValueError("no training data")
    if t.shape[0] != u.shape[0]:
        raise ValueError(f"{t.shape[0]} targets for {u.shape[0]} inputs")
    n, in_dim = u.shape
    out_dim = t.shape[1]
    denom = n * out_dim

    best = None
    for restart in range(config.restarts):
        rng = np.random.default_rng([config.seed, restart])
        w1, b1, w2, b2 = _init_params(rng, config.width, in_dim, out_dim, unbiased)
        lr = config.learning_rate
        mse = np.inf
        for step in range(config.steps):
            pre = u @ w1.T
            if b1 is not None:
                pre = pre + b1
            hid = np.maximum(pre, 0.0)
            out = hid @ w2.T
            if b2 is not None:
                out = out + b2
            resid = out - t
            mse = float(np.sum(resid * resid)) / denom
            if curve is not None:
                curve.append((restart, step, mse))
            if not np.isfinite(mse):
                break
            if mse <= config.target_mse:
                break
            d_out = (2.0 / denom) * resid
            g_w2 = d_out.T @ hid
            d_hid = (d_out @ w2) * (pre > 0.0)
            g_w1 = d_hid.T @ u
            w1 = w1 - lr * g_w1
            w2 = w2 - lr * g_w2
            if b1 is not None:
                b1 = b1 - lr * d_hid.sum(axis=0)
            if b2 is not None:
                b2 = b2 - lr * d_out.sum(axis=0)
        if not np.isfinite(mse):
            continue
        if best is None or mse < best[0]:
            best = (mse, restart, w1, b1, w2, b2)
        if best[0] <= config.target_mse:
            break
    if best is None:
        raise ValueError("all restarts diverged; reduce the learning rate")
    mse, _, w1, b1, w2, b2 = best
    layers = (LayerSpec(w1, b1), LayerSpec(w2, b2))
    net = NetworkSpec(layers, ActivationSpec.relu(), unbiased=unbiased)
    return net, mse


def fit_one_hidden_layer(
    data: SphereSampleSet, config: FitConfig, curve: list | None = None
) -> tuple[NetworkSpec, float]:
    """Fit a biased one-hidden-layer relu network to sphere samples; see
    ``fit_regression`` for the training scheme."""
    return fit_regression(data.directions, data.values, config, unbiased=False, curve=curve)


def _stack_scalar_homogenized(nets: Sequence[NetworkSpec]) -> NetworkSpec:
    """Merge scalar two-hidden-layer lifted nets that share the [I; -I] first
    layer into one multi-output net (second layers stacked, final block
    diagonal)."""
    first = nets[0].layers[0].weights
    for net in nets[1:]:
        if net.layers[0].weights.shape != first.shape or not np.array_equal(
            net.layers[0].weights, first
        ):
            raise ValueError("nets do not share the same first layer")
    second = np.vstack([net.layers[1].weights for net in nets])
    widths = [net.layers[1].weights.shape[0] for net in nets]
    final = np.zeros((len(nets), sum(widths)))
    offset = 0
    for j, net in enumerate(nets):
        final[j, offset : offset + widths[j]] = net.layers[2].weights[0]
        offset += widths[j]
    return unbiased_relu_net([first, second, final])


def build_inverse_recovery_net(
    a,
    signal_sampler: Callable[[np.random.Generator], np.ndarray],
    fit: FitConfig,
    lipschitz_bound: float | None = None,
    num_signals: int = 64,
    densify_points: int = 192,
    curves: dict[int, list] | None = None,
) -> NetworkSpec:
    """End-to-end construction of a bias-free two-hidden-layer relu network
    approximately inverting x -> A x on the signals the sampler produces.

    Pipeline: draw signals x_i and measurements y_i = A x_i; form sphere pairs
    (y_i / ||y_i||_1, x_i / ||y_i||_1); densify with the Lipschitz
    inf-extension at extra l1-sphere points (``lipschitz_bound=None`` uses the
    smallest constant consistent with the data, with 5% headroom); fit one
    hidden layer per output coordinate; lift every fit and stack the results.
    """
    a = as_matrix(a, "measurement matrix")
    m, n = a.shape
    if num_signals < 1:
        raise ValueError("need at least one signal")
    rng_signals = np.random.default_rng([fit.seed, 101])
    dirs = []
    vals = []
    for _ in range(num_signals):
        x = as_vector(signal_sampler(rng_signals), "sampled signal")
        if x.size != n:
            raise ValueError(f"sampled signal has length {x.size}, expected {n}")
        y = a @ x
        scale = float(np.abs(y).sum())
        if scale == 0.0:
            raise ValueError("signal in kernel of A")
        dirs.append(y / scale)
        vals.append(x / scale)
    dirs = np.array(dirs)
    vals = np.array(vals)

    # The extension only needs distinct directions (contradictory repeats are
    # rejected by its consistency check); repeated draws stay in the training
    # rows, where they act as weights.
    _, keep = np.unique(dirs.round(decimals=12), axis=0, return_index=True)
    keep.sort()
    anchor_dirs = dirs[keep]
    anchor_vals = vals[keep]

    if lipschitz_bound is None:
        lipschitz_bound = 1.05 * max(
            minimal_consistent_lipschitz(anchor_dirs, anchor_vals), 1e-12
        )
    extension = mcshane_extend(anchor_dirs, anchor_vals, lipschitz_bound)

    if densify_points > 0:
        rng_densify = np.random.default_rng([fit.seed, 202])
        extra = sample_l1_sphere(rng_densify, m, densify_points)
        extra_vals = np.array([extension(x) for x in extra])
        train_dirs = np.vstack([dirs, extra])
        train_vals = np.vstack([vals, extra_vals])
    else:
        train_dirs = dirs
        train_vals = vals
    data = SphereSampleSet(train_dirs, train_vals, "l1")

    lifted = []
    for j in range(n):
        coord_fit = dataclasses.replace(fit, seed=fit.seed * 1_000_003 + j)
        curve = None if curves is None else curves.setdefault(j, [])
        net_j, _ = fit_regression(data.directions, data.values[:, j], coord_fit, curve=curve)
        lifted.append(homogenize_one_layer(net_j))
    return _stack_scalar_homogenized(lifted)
