"""Seed-deterministic Monte Carlo generation of pulse records.

`simulate` partitions pulses into fixed-size chunks; chunk c of a run with
seed s consumes uniforms from a Philox generator keyed by (s, c), so the
output is bit-identical for a given (config, seed, chunk_size) regardless of
worker count or kernel backend. `sample_pulse` is the slow reference
implementation that draws every mode separately; the chunked kernels use a
distribution-equivalent aggregated form (sums of thermal modes are negative
binomial, thinned thermal/Poisson components stay thermal/Poisson).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
from numpy.random import Generator, Philox

from ..model import ExperimentConfig
from ._backend import ACTIVE_BACKEND, available_backends, sample_chunk
from ._plan import NCOLS, KernelPlan, build_kernel_plan

__all__ = [
    "PulseRecord",
    "SampleSet",
    "sample_thermal",
    "sample_pulse",
    "simulate",
    "chunk_uniforms",
    "build_kernel_plan",
    "ACTIVE_BACKEND",
    "available_backends",
    "DEFAULT_CHUNK_SIZE",
]

DEFAULT_CHUNK_SIZE = 4096
_MASK64 = (1 << 64) - 1


class PulseRecord(NamedTuple):
    """Detected counts of one pulse (real-valued once noise is added)."""

    n1: float
    n2: float


@dataclass
class SampleSet:
    """A batch of pulse records plus everything needed to regenerate it."""

    n1: np.ndarray
    n2: np.ndarray
    config: ExperimentConfig
    seed: int
    n_pulses: int
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __len__(self) -> int:
        return self.n_pulses

    def __getitem__(self, index: int) -> PulseRecord:
        return PulseRecord(float(self.n1[index]), float(self.n2[index]))

    @property
    def records(self) -> Iterator[PulseRecord]:
        for a, b in zip(self.n1, self.n2):
            yield PulseRecord(float(a), float(b))


def sample_thermal(mean_photons: float, rng: Generator, size: int | None = None):
    """Draw thermal (geometric) photon counts by inverse CDF.

    One uniform per draw: n = floor(log1p(-u) / log(mean / (1 + mean))).
    Returns a scalar int when size is None, otherwise an int64 array.
    """
    if mean_photons < 0:
        raise ValueError("mean_photons: must be >= 0")
    u = rng.random(size)
    if mean_photons == 0:
        return np.zeros_like(u, dtype=np.int64) if size is not None else 0
    log_s = np.log(mean_photons) - np.log1p(mean_photons)
    n = np.floor(np.log1p(-u) / log_s)
    if size is None:
        return int(n)
    return n.astype(np.int64)


def sample_pulse(config: ExperimentConfig, rng: Generator) -> PulseRecord:
    """Reference single-pulse draw, mode by mode.

    Each matched pair contributes one thermal count to both pre-loss totals;
    unmatched modes contribute independent thermal counts; Poisson
    backgrounds are added; each arm's total is thinned binomially; Gaussian
    electronic noise lands on top.
    """
    part = config.partition
    nbar = config.mean_photons_per_mode

    shared = int(np.sum(sample_thermal(nbar, rng, size=part.matched_pairs)))
    pre1 = shared + int(np.sum(sample_thermal(nbar, rng, size=part.unmatched_signal)))
    pre2 = shared + int(np.sum(sample_thermal(nbar, rng, size=part.unmatched_idler)))
    if config.background_signal > 0:
        pre1 += int(rng.poisson(config.background_signal))
    if config.background_idler > 0:
        pre2 += int(rng.poisson(config.background_idler))

    eta1 = config.signal_channel.efficiency
    eta2 = config.idler_channel.efficiency
    det1 = int(rng.binomial(pre1, eta1)) if eta1 < 1.0 else pre1
    det2 = int(rng.binomial(pre2, eta2)) if eta2 < 1.0 else pre2

    n1 = float(det1)
    n2 = float(det2)
    if config.signal_channel.electronic_noise_rms > 0:
        n1 += rng.normal(0.0, config.signal_channel.electronic_noise_rms)
    if config.idler_channel.electronic_noise_rms > 0:
        n2 += rng.normal(0.0, config.idler_channel.electronic_noise_rms)
    return PulseRecord(n1, n2)


def chunk_uniforms(seed: int, chunk_index: int, size: int) -> np.ndarray:
    """The uniform block consumed by one chunk: Philox keyed by (seed, chunk)."""
    key = np.array([seed & _MASK64, chunk_index & _MASK64], dtype=np.uint64)
    return Generator(Philox(key=key)).random((size, NCOLS))


def _run_chunk(plan: KernelPlan, seed: int, chunk_index: int, size: int):
    u = chunk_uniforms(seed, chunk_index, size)
    out1 = np.empty(size)
    out2 = np.empty(size)
    sample_chunk(plan, u, out1, out2)
    return out1, out2


def simulate(
    config: ExperimentConfig,
    n_pulses: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> SampleSet:
    """Generate a SampleSet of detected pulse counts.

    Deterministic in (config, seed, n_pulses, chunk_size); the worker count
    and the kernel backend never change the output.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses: must be >= 1")
    if chunk_size < 1:
        raise ValueError("chunk_size: must be >= 1")
    plan = build_kernel_plan(config)
    sizes = [
        min(chunk_size, n_pulses - start)
        for start in range(0, n_pulses, chunk_size)
    ]

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda ic: _run_chunk(plan, seed, ic[0], ic[1]),
                    enumerate(sizes),
                )
            )
    else:
        parts = [_run_chunk(plan, seed, i, size) for i, size in enumerate(sizes)]

    n1 = np.concatenate([p[0] for p in parts])
    n2 = np.concatenate([p[1] for p in parts])
    return SampleSet(
        n1=n1,
        n2=n2,
        config=config,
        seed=seed,
        n_pulses=n_pulses,
        chunk_size=chunk_size,
    )
