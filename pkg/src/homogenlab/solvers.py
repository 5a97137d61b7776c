"""Convex l1 recovery programs, their unrolled iterations, and forward
operators for quadratic measurements.

One first-order primal-dual splitting engine (proximal steps on both sides,
over-relaxation on the primal) drives four programs:

    qcbp     min ||z||_1           s.t. ||A z - y||_2 <= eta
    bpdn     min lam ||z||_1 + ||A z - y||_2^2
    lasso    min ||A z - y||_2     s.t. ||z||_1 <= tau
    dantzig  min ||z||_1           s.t. ||A^T (A z - y)||_inf <= eta

Each converged solution can be re-checked by an independent verifier built on
feasibility plus a dual certificate (a scaled subgradient condition). The
lasso residual is minimized through its square, which has the same
minimizers; reports print the plain residual.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numerics import (
    as_matrix,
    as_vector,
    matrix_norm,
    numerical_rank,
    project_l2_ball,
    project_linf_ball,
    soft_threshold,
)

VARIANTS = ("qcbp", "bpdn", "lasso", "dantzig")

DEFAULT_SUPPORT_CAP = 200_000


@dataclass(frozen=True)
class ProblemSpec:
    """One of the four recovery programs; build instances via the
    qcbp/bpdn/lasso/dantzig helpers."""

    variant: str
    a: np.ndarray
    y: np.ndarray
    eta: float | None = None
    lam: float | None = None
    tau_budget: float | None = None

    def __post_init__(self):
        a = as_matrix(self.a, "measurement matrix")
        y = as_vector(self.y, "measurement")
        if y.size != a.shape[0]:
            raise ValueError(f"measurement length {y.size} does not match {a.shape[0]} rows")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant in ("qcbp", "dantzig"):
            if self.eta is None or self.eta < 0:
                raise ValueError("eta must be non-negative")
        if self.variant == "bpdn" and (self.lam is None or self.lam <= 0):
            raise ValueError("lambda must be positive")
        if self.variant == "lasso" and (self.tau_budget is None or self.tau_budget < 0):
            raise ValueError("tau budget must be non-negative")
        if self.variant == "dantzig" and numerical_rank(a) != a.shape[0]:
            raise ValueError("dantzig requires a matrix of full row rank")


def qcbp(a, y, eta: float) -> ProblemSpec:
    return ProblemSpec("qcbp", a, y, eta=float(eta))


def bpdn(a, y, lam: float) -> ProblemSpec:
    return ProblemSpec("bpdn", a, y, lam=float(lam))


def lasso(a, y, tau_budget: float) -> ProblemSpec:
    return ProblemSpec("lasso", a, y, tau_budget=float(tau_budget))


def dantzig(a, y, eta: float) -> ProblemSpec:
    return ProblemSpec("dantzig", a, y, eta=float(eta))


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 50_000
    tol: float = 1e-8
    step_sizes: tuple[float, float] | None = None
    seed: int = 0


@dataclass(frozen=True)
class SolveReport:
    """Solver outcome. ``converged`` means both residuals dropped below the
    configured tolerance; ``multiplicity_hint`` flags two starts reaching
    equal objectives at visibly different points."""

    solution: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool
    multiplicity_hint: bool
    dual: np.ndarray


def _project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball via the sorted-threshold rule."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    mag = np.abs(v)
    if mag.sum() <= radius:
        return v.copy()
    if radius == 0.0:
        return np.zeros_like(v)
    drop = np.sort(mag)[::-1]
    cumulative = np.cumsum(drop)
    idx = np.arange(1, v.size + 1)
    positive = drop - (cumulative - radius) / idx > 0
    k = int(np.max(np.nonzero(positive)[0])) + 1
    theta = (cumulative[k - 1] - radius) / k
    return np.sign(v) * np.maximum(mag - theta, 0.0)


def objective_value(problem: ProblemSpec, z) -> float:
    z = as_vector(z, "solution")
    resid = problem.a @ z - problem.y
    if problem.variant == "qcbp" or problem.variant == "dantzig":
        return float(np.abs(z).sum())
    if problem.variant == "bpdn":
        return problem.lam * float(np.abs(z).sum()) + float(resid @ resid)
    return float(np.linalg.norm(resid))


def _variant_operators(problem: ProblemSpec):
    """(K, prox of the primal term, prox of the conjugate data term)."""
    a, y = problem.a, problem.y
    if problem.variant == "qcbp":
        k = a

        def prox_primal(z, t):
            return soft_threshold(z, t)

        def prox_dual(u, s):
            return u - s * project_l2_ball(u / s, y, problem.eta)

    elif problem.variant == "bpdn":
        k = a
        lam = problem.lam

        def prox_primal(z, t):
            return soft_threshold(z, t * lam)

        def prox_dual(u, s):
            return 2.0 * (u - s * y) / (s + 2.0)

    elif problem.variant == "lasso":
        k = a

        def prox_primal(z, t):
            return _project_l1_ball(z, problem.tau_budget)

        def prox_dual(u, s):
            return 2.0 * (u - s * y) / (s + 2.0)

    else:  # dantzig
        k = a.T @ a
        center = a.T @ y

        def prox_primal(z, t):
            return soft_threshold(z, t)

        def prox_dual(u, s):
            return u - s * project_linf_ball(u / s, center, problem.eta)

    return k, prox_primal, prox_dual


def _pdhg(problem, z0, config):
    k, prox_primal, prox_dual = _variant_operators(problem)
    op_norm = matrix_norm(k, "spectral")
    if config.step_sizes is not None:
        tau, sigma = config.step_sizes
        if tau <= 0 or sigma <= 0:
            raise ValueError("step sizes must be positive")
    else:
        tau = sigma = 0.95 / max(op_norm, 1e-30)
    z = z0.copy()
    u = np.zeros(k.shape[0])
    kz = k @ z
    ktu = k.T @ u
    z_bar_k = kz.copy()
    p_res = d_res = np.inf
    iters = 0
    for iters in range(1, config.max_iters + 1):
        u_new = prox_dual(u + sigma * z_bar_k, sigma)
        ktu_new = k.T @ u_new
        z_new = prox_primal(z - tau * ktu_new, tau)
        kz_new = k @ z_new
        p_res = float(np.linalg.norm((z - z_new) / tau - (ktu - ktu_new)))
        d_res = float(np.linalg.norm((u - u_new) / sigma - (kz - kz_new)))
        z_bar_k = 2.0 * kz_new - kz
        z, u, kz, ktu = z_new, u_new, kz_new, ktu_new
        if max(p_res, d_res) <= config.tol:
            break
    converged = max(p_res, d_res) <= config.tol
    return z, u, p_res, d_res, iters, converged


def solve(problem: ProblemSpec, config: SolveConfig = SolveConfig()) -> SolveReport:
    """Run the primal-dual engine on one of the four programs.

    Two starts are run: the origin (reported) and a seeded random point used
    only to flag solution multiplicity. A report with ``converged=False``
    means the iteration cap was hit, never a silently wrong answer.
    """
    n = problem.a.shape[1]
    z, u, p_res, d_res, iters, converged = _pdhg(problem, np.zeros(n), config)
    rng = np.random.default_rng(config.seed)
    alt0 = rng.standard_normal(n)
    alt, _, _, _, _, alt_converged = _pdhg(problem, alt0, config)
    multiplicity = False
    if converged and alt_converged:
        same_value = abs(objective_value(problem, z) - objective_value(problem, alt)) <= (
            config.tol * (1.0 + abs(objective_value(problem, z)))
        )
        far_apart = float(np.max(np.abs(z - alt))) > 100.0 * config.tol
        multiplicity = same_value and far_apart
    return SolveReport(
        solution=z,
        objective=objective_value(problem, z),
        primal_residual=p_res,
        dual_residual=d_res,
        iterations=iters,
        converged=converged,
        multiplicity_hint=multiplicity,
        dual=u,
    )


def verify_optimality(problem: ProblemSpec, solution, dual, tol: float) -> list[str]:
    """Independent optimality check: primal feasibility plus a duality-gap
    certificate built from the supplied dual vector (scaled into the dual
    feasible set first). Returns human-readable violations; empty means the
    point passes at tolerance ``tol``."""
    z = as_vector(solution, "solution")
    u = as_vector(dual, "dual")
    a, y = problem.a, problem.y
    resid = a @ z - y
    violations = []
    scale = 1.0 + abs(objective_value(problem, z))

    if problem.variant == "qcbp":
        feas = float(np.linalg.norm(resid)) - problem.eta
        if feas > tol:
            violations.append(f"infeasible: ||Az - y||_2 exceeds eta by {feas:.3e}")
        atu = a.T @ u
        sub = float(np.max(np.abs(atu))) if atu.size else 0.0
        if sub > 1.0 + tol:
            violations.append(f"dual subgradient bound violated: ||A^T u||_inf = {sub:.6f}")
        u_feas = u / max(1.0, sub)
        gap = objective_value(problem, z) - (
            -float(u_feas @ y) - problem.eta * float(np.linalg.norm(u_feas))
        )
        if gap > tol * scale:
            violations.append(f"duality gap {gap:.3e} above {tol * scale:.3e}")
    elif problem.variant == "bpdn":
        atu = a.T @ u
        sub = float(np.max(np.abs(atu))) if atu.size else 0.0
        if sub > problem.lam * (1.0 + tol):
            violations.append(f"dual subgradient bound violated: ||A^T u||_inf = {sub:.6f}")
        u_feas = u / max(1.0, sub / problem.lam)
        gap = objective_value(problem, z) - (-float(u_feas @ y) - float(u_feas @ u_feas) / 4.0)
        if gap > tol * scale:
            violations.append(f"duality gap {gap:.3e} above {tol * scale:.3e}")
    elif problem.variant == "lasso":
        feas = float(np.abs(z).sum()) - problem.tau_budget
        if feas > tol:
            violations.append(f"infeasible: ||z||_1 exceeds tau by {feas:.3e}")
        atu = a.T @ u
        primal_sq = float(resid @ resid)
        dual_val = (
            -float(u @ y)
            - float(u @ u) / 4.0
            - problem.tau_budget * (float(np.max(np.abs(atu))) if atu.size else 0.0)
        )
        gap = primal_sq - dual_val
        if gap > tol * (1.0 + primal_sq):
            violations.append(f"duality gap {gap:.3e} above {tol * (1.0 + primal_sq):.3e}")
    else:  # dantzig
        w = a.T @ resid
        feas = (float(np.max(np.abs(w))) if w.size else 0.0) - problem.eta
        if feas > tol:
            violations.append(f"infeasible: ||A^T(Az - y)||_inf exceeds eta by {feas:.3e}")
        k = a.T @ a
        ku = k @ u
        sub = float(np.max(np.abs(ku))) if ku.size else 0.0
        if sub > 1.0 + tol:
            violations.append(f"dual subgradient bound violated: ||A^T A u||_inf = {sub:.6f}")
        u_feas = u / max(1.0, sub)
        gap = objective_value(problem, z) - (
            -float(u_feas @ (a.T @ y)) - problem.eta * float(np.abs(u_feas).sum())
        )
        if gap > tol * scale:
            violations.append(f"duality gap {gap:.3e} above {tol * scale:.3e}")
    return violations


def brute_force_sparse_fit(
    a, y, s: int, cap: int = DEFAULT_SUPPORT_CAP
) -> tuple[tuple[int, ...], np.ndarray, float]:
    """Exhaustive least squares over every support of size <= s.

    Returns (support, coefficients on that support, residual l2 norm) for the
    global minimizer, ties broken by the lexicographically smallest support —
    so the answer does not depend on enumeration order.
    """
    a = as_matrix(a, "measurement matrix")
    y = as_vector(y, "measurement")
    if y.size != a.shape[0]:
        raise ValueError(f"measurement length {y.size} does not match {a.shape[0]} rows")
    n = a.shape[1]
    if not 0 <= s <= n:
        raise ValueError(f"sparsity {s} out of range [0, {n}]")
    count = math.comb(n, s)
    if count > cap:
        raise ValueError(f"support enumeration needs {count} supports, cap is {cap}")
    best_support: tuple[int, ...] = ()
    best_coeffs = np.zeros(0)
    best_res = float(np.linalg.norm(y))
    for size in range(1, s + 1):
        for support in itertools.combinations(range(n), size):
            cols = a[:, support]
            coeffs, _, _, _ = np.linalg.lstsq(cols, y, rcond=None)
            res = float(np.linalg.norm(cols @ coeffs - y))
            if res < best_res or (res == best_res and support < best_support):
                best_support = support
                best_coeffs = coeffs
                best_res = res
    return best_support, best_coeffs, best_res


def ista_run(a, y, lam: float, step_bound: float, iters: int, x0=None) -> np.ndarray:
    """Iterative shrinkage-thresholding trajectory for
    min lam ||z||_1 + (1/2) ||A z - y||_2^2:
    x <- eta_{lam/L}(x - (1/L) A^T (A x - y)).

    Returns the (iters + 1, n) array of iterates including the start. With
    L >= sigma_max(A)^2 the objective is non-increasing along the trajectory.
    """
    a = as_matrix(a, "measurement matrix")
    y = as_vector(y, "measurement")
    if step_bound <= 0:
        raise ValueError("step bound L must be positive")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if iters < 0:
        raise ValueError("iteration count must be non-negative")
    n = a.shape[1]
    x = np.zeros(n) if x0 is None else as_vector(x0, "start").copy()
    if x.size != n:
        raise ValueError(f"start length {x.size} does not match {n} columns")
    trajectory = np.empty((iters + 1, n))
    trajectory[0] = x
    threshold = lam / step_bound
    for i in range(1, iters + 1):
        x = soft_threshold(x - (a.T @ (a @ x - y)) / step_bound, threshold)
        trajectory[i] = x
    return trajectory


def ista_objective(a, y, lam: float, z) -> float:
    resid = as_matrix(a) @ as_vector(z) - as_vector(y)
    return lam * float(np.abs(z).sum()) + 0.5 * float(resid @ resid)


@dataclass(frozen=True)
class Lista:
    """Unrolled shrinkage iteration with explicit per-layer matrices:
    x <- eta_threshold(W1[l] x + W2[l] y)."""

    w1_layers: tuple[np.ndarray, ...]
    w2_layers: tuple[np.ndarray, ...]
    threshold: float

    def __post_init__(self):
        w1 = tuple(as_matrix(w, f"w1_layers[{i}]") for i, w in enumerate(self.w1_layers))
        w2 = tuple(as_matrix(w, f"w2_layers[{i}]") for i, w in enumerate(self.w2_layers))
        if len(w1) != len(w2):
            raise ValueError(f"{len(w1)} state matrices vs {len(w2)} input matrices")
        for i, (m1, m2) in enumerate(zip(w1, w2)):
            if m1.shape[0] != m1.shape[1]:
                raise ValueError(f"w1_layers[{i}] must be square, got {m1.shape}")
            if m2.shape[0] != m1.shape[0]:
                raise ValueError(
                    f"w2_layers[{i}] rows {m2.shape[0]} do not match state size {m1.shape[0]}"
                )
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")
        object.__setattr__(self, "w1_layers", w1)
        object.__setattr__(self, "w2_layers", w2)

    @property
    def depth(self) -> int:
        return len(self.w1_layers)


def lista_from_ista(a, lam: float, step_bound: float, depth: int) -> Lista:
    """Unroll ``depth`` shrinkage iterations with the matrices the plain
    iteration induces: W1 = I - (1/L) A^T A, W2 = (1/L) A^T."""
    a = as_matrix(a, "measurement matrix")
    if step_bound <= 0:
        raise ValueError("step bound L must be positive")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    n = a.shape[1]
    w1 = np.eye(n) - (a.T @ a) / step_bound
    w2 = a.T / step_bound
    return Lista((w1,) * depth, (w2,) * depth, lam / step_bound)


def lista_eval(net: Lista, y, x0=None) -> np.ndarray:
    y = as_vector(y, "measurement")
    if net.depth == 0:
        if x0 is None:
            raise ValueError("depth-0 evaluation needs an explicit start")
        return as_vector(x0, "start").copy()
    n = net.w1_layers[0].shape[0]
    if net.w2_layers[0].shape[1] != y.size:
        raise ValueError(
            f"measurement length {y.size} does not match input matrix columns "
            f"{net.w2_layers[0].shape[1]}"
        )
    x = np.zeros(n) if x0 is None else as_vector(x0, "start").copy()
    if x.size != n:
        raise ValueError(f"start length {x.size} does not match state size {n}")
    for w1, w2 in zip(net.w1_layers, net.w2_layers):
        x = soft_threshold(w1 @ x + w2 @ y, net.threshold)
    return x


def lowrank_forward(a, x) -> np.ndarray:
    """Quadratic measurement map of a square matrix: component j is
    row_j(A) X row_j(A)^T."""
    a = as_matrix(a, "measurement matrix")
    x = as_matrix(x, "matrix signal")
    n = a.shape[1]
    if x.shape != (n, n):
        raise ValueError(f"matrix signal must be {n}x{n}, got {x.shape}")
    return np.einsum("jk,kl,jl->j", a, x, a)


def phase_retrieval_forward(a, x) -> np.ndarray:
    """Componentwise squared measurements |A x|^2; invariant under x -> -x and
    identical to the quadratic map applied to x x^T."""
    a = as_matrix(a, "measurement matrix")
    x = as_vector(x, "signal")
    if x.size != a.shape[1]:
        raise ValueError(f"signal length {x.size} does not match {a.shape[1]} columns")
    z = a @ x
    return z * z


def robustness_scan(
    f: Callable[[np.ndarray], np.ndarray],
    a,
    x,
    noise_levels: Sequence[float],
    trials: int,
    seed: int,
) -> list[tuple[float, int, float]]:
    """Perturbation-gain table of a reconstruction map: for every noise level
    and trial, draw e uniformly on the sphere of that radius and record
    ||f(Ax + e) - f(Ax)||_2 / ||e||_2. Deterministic given the seed."""
    a = as_matrix(a, "measurement matrix")
    x = as_vector(x, "signal")
    levels = [float(v) for v in noise_levels]
    if not levels:
        raise ValueError("need at least one noise level")
    if any(v <= 0 for v in levels):
        raise ValueError("noise levels must be strictly positive")
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    y = a @ x
    base = np.asarray(f(y), dtype=np.float64)
    rows = []
    for level in levels:
        for trial in range(trials):
            direction = rng.standard_normal(y.size)
            e = direction * (level / float(np.linalg.norm(direction)))
            gain = float(np.linalg.norm(np.asarray(f(y + e), dtype=np.float64) - base))
            rows.append((level, trial, gain / float(np.linalg.norm(e))))
    return rows


def selection_discontinuity_demo(y2: float) -> tuple[float, bool]:
    """Exact minimizer of min_{z1} |z1| + |y2 (1 - z1)| for y2 in (0, 2).

    The solution jumps from z1 = 0 (y2 < 1) to z1 = 1 (y2 > 1); at y2 = 1 the
    whole interval [0, 1] is optimal, flagged via the multiplicity bit with
    z1 = 0 returned by convention. No continuous selection can bridge the
    jump.
    """
    if not 0.0 < y2 < 2.0:
        raise ValueError(f"y2 must lie in (0, 2), got {y2}")
    if y2 < 1.0:
        return 0.0, False
    if y2 > 1.0:
        return 1.0, False
    return 0.0, True
