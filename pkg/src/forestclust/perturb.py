"""Monte-Carlo smoothed versions of the forest solver.

Each sample draws symmetric noise on the off-diagonal entries, solves the
(possibly constrained) forest problem on ``sigma + epsilon * noise``, and the
binary outputs are averaged: edge indicators into a SoftForest, co-membership
indicators into a SoftMembership, objective values into a scalar.  The
reported value always averages the perturbed objectives, i.e. it estimates
the expectation of the perturbed maximum, not the value of the averaged
forest.

Determinism contract
--------------------
Every sample owns a private counter-based RNG stream: a Philox generator
keyed by the config seed whose counter block encodes (sample index, stream
tag).  Drawing sample 57 therefore never depends on whether samples 0..56
were drawn before it, on chunking, or on which thread ran it.  Samples are
processed in fixed chunks of 64 and the chunk partial sums are combined in
chunk order, so float accumulation order is also schedule-independent:
outputs are bit-identical for any ``threads`` value.

Stream tags: tag 0 carries the primary noise sequence.  Constrained solves
reuse tag 0 when ``coupled`` is set (common random numbers against the
matching unconstrained estimate) and switch to tag 1 otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    PartialMembership,
    SimilarityMatrix,
    SoftForest,
    SoftMembership,
)
from .solver import (
    ConstraintData,
    _check_k,
    _tri,
    solve_constrained_upper,
    solve_upper,
    upper_vector,
)

_CHUNK = 64
_MASK64 = (1 << 64) - 1
_NOISE_LAWS = ("gaussian", "logistic")

STREAM_MAIN = 0
STREAM_ALT = 1


@dataclass(frozen=True)
class PerturbationConfig:
    """Noise amplitude, sample count, and RNG seeding for the smoothed ops.

    coupled=True makes paired constrained/unconstrained estimates share
    noise samples; the expectation is unchanged but differences of the two
    estimates lose most of their variance and stay pointwise nonnegative.
    """

    epsilon: float
    samples: int = 100
    seed: int = 0
    noise: str = "gaussian"
    coupled: bool = True

    def __post_init__(self):
        eps = self.epsilon
        if not isinstance(eps, (int, float)) or isinstance(eps, bool):
            raise ValueError("epsilon must be a positive real number")
        eps = float(eps)
        if not math.isfinite(eps) or eps <= 0.0:
            raise ValueError(f"epsilon must be finite and > 0, got {eps}")
        object.__setattr__(self, "epsilon", eps)
        if not isinstance(self.samples, (int, np.integer)) or isinstance(
            self.samples, bool
        ):
            raise ValueError("samples must be an integer")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        object.__setattr__(self, "samples", int(self.samples))
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ValueError("seed must be a nonnegative integer")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.noise not in _NOISE_LAWS:
            raise ValueError(f"noise must be one of {_NOISE_LAWS}, got {self.noise!r}")


def _noise_upper(n: int, config: PerturbationConfig, sample_index: int, stream: int):
    """Flat upper-triangle noise vector for one sample, from its own stream.

    The Philox counter block is [0, sample_index, stream, 0]; the generator
    only ever advances the first word, so distinct (index, stream) pairs can
    never collide.
    """
    m = n * (n - 1) // 2
    bitgen = np.random.Philox(
        key=[config.seed & _MASK64, (config.seed >> 64) & _MASK64],
        counter=[0, sample_index, stream, 0],
    )
    rng = np.random.Generator(bitgen)
    if config.noise == "gaussian":
        return rng.standard_normal(m)
    return rng.logistic(0.0, 1.0, m)


def sample_noise(n: int, config: PerturbationConfig, sample_index: int) -> np.ndarray:
    """The noise matrix for one Monte-Carlo sample: symmetric, zero diagonal,
    upper-triangle entries iid from the configured law.

    Pure function of (n, config.seed, config.noise, sample_index); see the
    module docstring for the stream layout.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if sample_index < 0:
        raise ValueError(f"sample_index must be >= 0, got {sample_index}")
    z = _noise_upper(n, config, sample_index, STREAM_MAIN)
    out = np.zeros((n, n))
    ui, uj, _, _ = _tri(n)
    out[ui, uj] = z
    return out + out.T


def _chunk_bounds(count: int) -> list:
    return [(lo, min(lo + _CHUNK, count)) for lo in range(0, count, _CHUNK)]


def _run_chunks(count: int, worker, threads: int) -> list:
    """Run worker over fixed-size index chunks, returning partials in chunk
    order regardless of the execution schedule."""
    bounds = _chunk_bounds(count)
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, bounds))
    return [worker(b) for b in bounds]


def _edge_freq_matrix(counts: np.ndarray, samples: int, n: int) -> np.ndarray:
    vals = np.zeros((n, n))
    ui, uj, _, _ = _tri(n)
    vals[ui, uj] = counts / samples
    return vals + vals.T


def perturbed_forest(
    sigma: SimilarityMatrix, k: int, config: PerturbationConfig, threads: int = 1
):
    """Smoothed forest solve: (SoftForest of edge frequencies, mean perturbed
    objective value)."""
    n = sigma.n
    _check_k(n, k)
    w = upper_vector(sigma.values)
    m = w.size
    eps = config.epsilon

    def worker(bounds):
        lo, hi = bounds
        counts = np.zeros(m, dtype=np.int64)
        total = 0.0
        for b in range(lo, hi):
            z = _noise_upper(n, config, b, STREAM_MAIN)
            chosen, _, value = solve_upper(w + eps * z, n, k)
            counts[chosen] += 1
            total += value
        return counts, total

    counts = np.zeros(m, dtype=np.int64)
    total = 0.0
    for part_counts, part_total in _run_chunks(config.samples, worker, threads):
        counts += part_counts
        total += part_total
    soft = SoftForest(_edge_freq_matrix(counts, config.samples, n), k)
    return soft, total / config.samples


def perturbed_constrained_forest(
    sigma: SimilarityMatrix,
    k: int,
    partial: PartialMembership,
    config: PerturbationConfig,
    use_bias: bool = True,
    threads: int = 1,
):
    """Smoothed constrained solve.  Every sample satisfies the observed
    entries, so the SoftForest never smears mass across a Different pair.

    Infeasible constraints are detected before any sampling: contradiction
    and cluster-budget failures are weight-independent, and the remaining
    dead-end case is probed with one unperturbed solve.
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
    stream = STREAM_MAIN if config.coupled else STREAM_ALT

    def worker(bounds):
        lo, hi = bounds
        counts = np.zeros(m, dtype=np.int64)
        total = 0.0
        for b in range(lo, hi):
            z = _noise_upper(n, config, b, stream)
            chosen, _, value = solve_constrained_upper(w + eps * z, n, k, cdata, use_bias)
            counts[chosen] += 1
            total += value
        return counts, total

    counts = np.zeros(m, dtype=np.int64)
    total = 0.0
    for part_counts, part_total in _run_chunks(config.samples, worker, threads):
        counts += part_counts
        total += part_total
    soft = SoftForest(_edge_freq_matrix(counts, config.samples, n), k)
    return soft, total / config.samples


def perturbed_membership(
    sigma: SimilarityMatrix,
    k: int,
    config: PerturbationConfig,
    partial: PartialMembership | None = None,
    use_bias: bool = True,
    threads: int = 1,
) -> SoftMembership:
    """Smoothed co-membership: entry (i, j) is the fraction of samples whose
    solved forest put i and j in the same component.  Diagonal is exactly 1."""
    n = sigma.n
    _check_k(n, k)
    w = upper_vector(sigma.values)
    eps = config.epsilon
    if partial is None:
        cdata = None
        stream = STREAM_MAIN
    else:
        if partial.n != n:
            raise ValueError(f"size mismatch: sigma n={n}, partial n={partial.n}")
        cdata = ConstraintData(partial)
        solve_constrained_upper(w, n, k, cdata, use_bias)
        stream = STREAM_MAIN if config.coupled else STREAM_ALT

    def worker(bounds):
        lo, hi = bounds
        counts = np.zeros((n, n), dtype=np.int64)
        for b in range(lo, hi):
            z = _noise_upper(n, config, b, stream)
            if cdata is None:
                _, assignment, _ = solve_upper(w + eps * z, n, k)
            else:
                _, assignment, _ = solve_constrained_upper(w + eps * z, n, k, cdata, use_bias)
            roots = np.asarray(assignment)
            counts += roots[:, None] == roots[None, :]
        return counts

    counts = np.zeros((n, n), dtype=np.int64)
    for part in _run_chunks(config.samples, worker, threads):
        counts += part
    return SoftMembership(counts / config.samples)
