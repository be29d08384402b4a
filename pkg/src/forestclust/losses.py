"""Losses whose gradient is a difference of (smoothed) forest solutions.

The base loss for a known target forest is the max-minus-inner-product form
``F_k(sigma) - <sigma, target>``.  When only a partial membership is known,
the target term is replaced by the best forest consistent with it, giving
``F_k(sigma) - F_k(sigma; partial)``: always nonnegative, and zero exactly
when the unconstrained argmax already satisfies every observed entry.  The
Monte-Carlo version smooths both terms with shared noise samples, so the
per-sample differences stay nonnegative and the gradient is the difference
of the two soft edge-frequency matrices.

Gradient convention.  Objectives read each unordered pair once (the edge
convention documented in the solver module), so the loss is a function of
the upper-triangle coordinates.  grad_sigma is returned as a symmetric
matrix whose mirrored entries BOTH hold the full derivative with respect to
their pair's coordinate.  Consequently a finite-difference probe must move
the pair coordinate as one unit, i.e. bump sigma[i, j] and sigma[j, i]
together by h, and the measured slope then matches grad_sigma[i, j] with no
extra factor.  fd_gradient_check implements exactly this probe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    ForestAdjacency,
    InfeasibleConstraints,
    PartialMembership,
    SimilarityMatrix,
)
from .perturb import (
    STREAM_ALT,
    STREAM_MAIN,
    PerturbationConfig,
    _noise_upper,
    _run_chunks,
)
from .solver import (
    ConstraintData,
    _check_k,
    _tri,
    feasible_forests,
    solve_constrained_upper,
    solve_upper,
    upper_index,
    upper_vector,
)


@dataclass(frozen=True)
class LossValue:
    """Loss with its similarity-space gradient and per-term diagnostics.

    term_unconstrained and term_constrained are the two averaged objective
    values whose difference is the loss (for the target-forest form, the
    second is the target's inner product).
    """

    value: float
    grad_sigma: np.ndarray
    term_unconstrained: float
    term_constrained: float

    def __post_init__(self):
        g = np.asarray(self.grad_sigma, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"grad_sigma must be square, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("grad_sigma must be finite")
        if not np.array_equal(g, g.T):
            raise ValueError("grad_sigma must be symmetric")
        g.flags.writeable = False
        object.__setattr__(self, "grad_sigma", g)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "term_unconstrained", float(self.term_unconstrained))
        object.__setattr__(self, "term_constrained", float(self.term_constrained))


def _indicator_matrix(chosen, n: int) -> np.ndarray:
    vals = np.zeros((n, n))
    _, _, ui, uj = _tri(n)
    for idx in chosen:
        vals[ui[idx], uj[idx]] = 1.0
    return vals + vals.T


def fy_loss(sigma: SimilarityMatrix, k: int, target_forest: ForestAdjacency) -> LossValue:
    """Loss against a known target forest with k components.

    Zero iff the target is itself a maximum-weight k-forest; the gradient is
    the exact 0/1 difference argmax-minus-target.
    """
    n = sigma.n
    _check_k(n, k)
    if target_forest.n != n:
        raise ValueError(f"size mismatch: sigma n={n}, target n={target_forest.n}")
    if target_forest.k != k:
        raise ValueError(
            f"target forest has {target_forest.k} components, expected {k}"
        )
    w = upper_vector(sigma.values)
    chosen, _, best = solve_upper(w, n, k)
    target_idx = [upper_index(i, j, n) for i, j in target_forest.edges]
    # Same ascending-index summation as the solver, so a target equal to the
    # argmax yields a value of exactly 0.0.
    target_value = float(w[sorted(target_idx)].sum()) if target_idx else 0.0
    grad = _indicator_matrix(chosen, n) - target_forest.matrix()
    return LossValue(best - target_value, grad, best, target_value)


def partial_fy_loss(
    sigma: SimilarityMatrix,
    k: int,
    partial: PartialMembership,
    use_bias: bool = False,
) -> LossValue:
    """Hard (unsmoothed) partial loss: unconstrained minus constrained max.

    use_bias defaults off here: the plain budget-checked greedy reproduces
    the unconstrained argmax whenever that argmax is feasible, which is what
    makes the loss vanish exactly at feasibility.  The ordering bias can
    force a directly-wired Same pair where the argmax routes the pair
    through a path, spoiling that property while remaining a valid search
    heuristic for training.  Outside the solver's guaranteed observation
    regimes either mode may conservatively raise InfeasibleConstraints on a
    satisfiable instance (see constrained_max_spanning_forest).
    """
    n = sigma.n
    _check_k(n, k)
    if partial.n != n:
        raise ValueError(f"size mismatch: sigma n={n}, partial n={partial.n}")
    w = upper_vector(sigma.values)
    cdata = ConstraintData(partial)
    chosen_u, _, value_u = solve_upper(w, n, k)
    chosen_c, _, value_c = solve_constrained_upper(w, n, k, cdata, use_bias)
    grad = _indicator_matrix(chosen_u, n) - _indicator_matrix(chosen_c, n)
    value = value_u - value_c
    if value < -1e-9:
        raise RuntimeError(
            f"constrained value exceeded unconstrained by {-value}; solver bug"
        )
    return LossValue(value, grad, value_u, value_c)


def perturbed_partial_fy_loss(
    sigma: SimilarityMatrix,
    k: int,
    partial: PartialMembership,
    config: PerturbationConfig,
    use_bias: bool = False,
    threads: int = 1,
) -> LossValue:
    """Monte-Carlo smoothed partial loss.

    With coupled sampling (the default config) each sample solves both
    problems on the same perturbed weights, so every per-sample difference
    is nonnegative and an all-Unobserved partial cancels to exactly zero.
    The gradient equals perturbed_forest minus perturbed_constrained_forest
    frequencies, bit-for-bit, coupled or not, provided use_bias matches the
    standalone constrained call (it defaults off here, on there; see
    partial_fy_loss for why the loss layer wants the exact mode).

    Outside the constrained solver's guaranteed observation regimes (see
    constrained_max_spanning_forest) a per-sample solve can conservatively
    raise InfeasibleConstraints even though the probe solve on the
    unperturbed weights succeeded: the stall depends on the perturbed weight
    ordering, not just the pattern.  The exception propagates; training
    loops treat it as a skipped batch.
    """
    n = sigma.n
    _check_k(n, k)
    if partial.n != n:
        raise ValueError(f"size mismatch: sigma n={n}, partial n={partial.n}")
    w = upper_vector(sigma.values)
    m = w.size
    eps = config.epsilon
    cdata = ConstraintData(partial)
    solve_constrained_upper(w, n, k, cdata, use_bias)
    stream_con = STREAM_MAIN if config.coupled else STREAM_ALT

    def worker(bounds):
        lo, hi = bounds
        counts_u = np.zeros(m, dtype=np.int64)
        counts_c = np.zeros(m, dtype=np.int64)
        total_u = 0.0
        total_c = 0.0
        for b in range(lo, hi):
            z = _noise_upper(n, config, b, STREAM_MAIN)
            wp = w + eps * z
            chosen_u, _, value_u = solve_upper(wp, n, k)
            if stream_con != STREAM_MAIN:
                z = _noise_upper(n, config, b, stream_con)
                wp = w + eps * z
            chosen_c, _, value_c = solve_constrained_upper(wp, n, k, cdata, use_bias)
            counts_u[chosen_u] += 1
            counts_c[chosen_c] += 1
            total_u += value_u
            total_c += value_c
        return counts_u, counts_c, total_u, total_c

    counts_u = np.zeros(m, dtype=np.int64)
    counts_c = np.zeros(m, dtype=np.int64)
    total_u = 0.0
    total_c = 0.0
    for cu, cc, tu, tc in _run_chunks(config.samples, worker, threads):
        counts_u += cu
        counts_c += cc
        total_u += tu
        total_c += tc

    B = config.samples
    term_u = total_u / B
    term_c = total_c / B
    # Same elementwise arithmetic as the standalone soft operators, so the
    # documented grad identity holds bitwise, not just approximately.
    grad_flat = counts_u / B - counts_c / B
    grad = np.zeros((n, n))
    iu, ju, _, _ = _tri(n)
    grad[iu, ju] = grad_flat
    grad = grad + grad.T
    value = term_u - term_c
    if config.coupled and value < -1e-9:
        raise RuntimeError(
            f"coupled loss came out {value} < 0; per-sample coupling is broken"
        )
    return LossValue(value, grad, term_u, term_c)


class JensenGap(NamedTuple):
    """Both sides of the smoothed-loss comparison, plus the Monte-Carlo
    standard error of the lhs estimate (0.0 when samples == 1)."""

    lhs: float
    rhs: float
    stderr: float


def jensen_gap_check(
    sigma: SimilarityMatrix,
    k: int,
    partial: PartialMembership,
    config: PerturbationConfig,
) -> JensenGap:
    """Estimate the smoothed partial loss (lhs) and the smallest smoothed
    target-forest loss over all feasible forests (rhs), with shared noise.

    Both maxima are taken by exhaustive enumeration, so this is an oracle
    check independent of the greedy solver; n is capped accordingly.  With
    shared samples, lhs <= rhs holds sample-by-sample (a mean of maxima
    dominates a maximum of means), so the comparison is deterministic.
    """
    n = sigma.n
    _check_k(n, k)
    if partial.n != n:
        raise ValueError(f"size mismatch: sigma n={n}, partial n={partial.n}")
    if n > 7:
        raise ValueError(f"enumeration-based check is limited to n <= 7, got n={n}")
    feasible = feasible_forests(n, k, partial)
    if not feasible:
        raise InfeasibleConstraints(
            f"no forest with {k} components satisfies the observed entries"
        )
    every = feasible_forests(n, k, None)

    m = n * (n - 1) // 2

    def rows(forests):
        y = np.zeros((len(forests), m))
        for r, edges in enumerate(forests):
            for i, j in edges:
                y[r, upper_index(i, j, n)] = 1.0
        return y

    y_con = rows(feasible)
    y_all = rows(every)
    w = upper_vector(sigma.values)
    B = config.samples
    noise = np.empty((B, m))
    for b in range(B):
        noise[b] = _noise_upper(n, config, b, STREAM_MAIN)
    perturbed = w + config.epsilon * noise

    f_unc = (y_all @ perturbed.T).max(axis=0)
    f_con = (y_con @ perturbed.T).max(axis=0)
    terms = f_unc - f_con
    lhs = float(terms.mean())
    stderr = float(terms.std(ddof=1) / np.sqrt(B)) if B > 1 else 0.0
    rhs = float(f_unc.mean() - (y_con @ perturbed.mean(axis=0)).max())
    return JensenGap(lhs, rhs, stderr)


def fd_gradient_check(
    sigma: SimilarityMatrix,
    k: int,
    partial: PartialMembership,
    config: PerturbationConfig,
    h: float = 1e-6,
    corrupt: float = 0.0,
    threads: int = 1,
) -> float:
    """Max absolute deviation between grad_sigma and central finite
    differences of the smoothed loss, over all upper-triangle coordinates.

    The noise is fixed by the config seed, so the sampled loss is a
    deterministic piecewise-linear function of sigma and the check is exact
    up to float error whenever no sample's argmax flips inside the probe
    window.  Each probe bumps the two mirrored entries together, matching
    the gradient convention in the module docstring.  corrupt shifts every
    gradient entry by that amount first; it exists as a negative-control
    hook for the verification command and must stay 0.0 for a real check.
    """
    base = perturbed_partial_fy_loss(sigma, k, partial, config, threads=threads)
    grad = base.grad_sigma + corrupt
    n = sigma.n
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            bumped = sigma.values.copy()
            slopes = []
            for sign in (1.0, -1.0):
                bumped[i, j] = sigma.values[i, j] + sign * h
                bumped[j, i] = sigma.values[j, i] + sign * h
                shifted = perturbed_partial_fy_loss(
                    SimilarityMatrix(bumped), k, partial, config, threads=threads
                )
                slopes.append(shifted.value)
            slope = (slopes[0] - slopes[1]) / (2.0 * h)
            worst = max(worst, abs(slope - grad[i, j]))
    return worst
