"""Reproducible sampling of chi triangular arrays and the tridiagonal model.

Every replica draws from its own counter-based Philox stream keyed by
``(master_seed, replica, ...)`` through :class:`numpy.random.SeedSequence`
spawn keys.  Entries inside a replica are drawn in a fixed order, so a
replica's values depend only on its key and never on which worker thread
produced it or in what order replicas were scheduled.

Gamma variates use numpy's Marsaglia-Tsang sampler for shape >= 1.  Smaller
shapes ``a`` are boosted from a shape ``a + 1`` draw:
``G_a = G_{a+1} U**(1/a)``, carried as ``log G_{a+1} + log(U) / a`` because
``U**(1/a)`` underflows once ``a`` is of order 1e-3.
"""

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

THREADS_ENV = "BETA_EXTREMES_THREADS"
_LOG2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)


def replica_stream(master_seed, *path):
    """Independent generator for the stream ``(master_seed, *path)``."""
    if master_seed < 0 or any(p < 0 for p in path):
        raise DomainError("seeds and stream indices must be nonnegative")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))


def _shapes(shape):
    arr = np.asarray(shape, dtype=np.float64)
    if not np.all(arr > 0):
        raise DomainError(f"gamma shape must be > 0, got {shape!r}")
    return arr


def sample_log_gamma(shape, stream, size=None):
    """Logarithms of Gamma(shape, 1) draws; finite even where the draw underflows.

    ``shape`` may be an array, in which case one draw per element is returned
    (``size`` must then be None).
    """
    a = _shapes(shape)
    if size is not None:
        a = np.broadcast_to(a, size)
    small = a < 1.0
    base = stream.standard_gamma(np.where(small, a + 1.0, a))
    # 1 - U lies in (0, 1], so log(U) / a is finite
    u = 1.0 - stream.random(np.shape(base))
    out = np.log(base) + np.where(small, np.log(u) / a, 0.0)
    return out if np.ndim(out) else float(out)


def sample_gamma(shape, stream, size=None):
    """Gamma(shape, 1) draws.  Values below the smallest double flush to 0."""
    return np.exp(sample_log_gamma(shape, stream, size))


def sample_log_chi(k, stream, size=None):
    """``log chi(k)`` draws, using ``chi(k) = sqrt(2 Gamma(k/2, 1))``."""
    k = _shapes(k)
    return 0.5 * (_LOG2 + sample_log_gamma(k / 2.0, stream, size))


def sample_chi(k, stream, size=None):
    """``chi(k)`` draws for ``k > 0``."""
    return np.exp(sample_log_chi(k, stream, size))


@dataclass(frozen=True)
class TriangularSample:
    """One realization of ``X_i ~ chi(i beta)``, ``i = 1..n``, stored in index order."""

    n: int
    beta: float
    values: np.ndarray = field(repr=False)
    seed_path: tuple = ()

    def __post_init__(self):
        if self.values.shape != (self.n,):
            raise DomainError(f"expected {self.n} values, got shape {self.values.shape}")


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal."""

    diagonal: np.ndarray = field(repr=False)
    offdiagonal: np.ndarray = field(repr=False)
    n: int = -1

    def __post_init__(self):
        d = np.ascontiguousarray(self.diagonal, dtype=np.float64)
        e = np.ascontiguousarray(self.offdiagonal, dtype=np.float64)
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "offdiagonal", e)
        if self.n < 0:
            object.__setattr__(self, "n", d.shape[0])
        if d.shape != (self.n,) or e.shape != (max(self.n - 1, 0),):
            raise DomainError(f"inconsistent shapes {d.shape}, {e.shape} for n={self.n}")

    def dense(self):
        return np.diag(self.diagonal) + np.diag(self.offdiagonal, 1) + np.diag(self.offdiagonal, -1)

    def scaled(self, c):
        return TridiagonalMatrix(c * self.diagonal, c * self.offdiagonal, self.n)


def _check_nbeta(n, beta, n_min):
    if int(n) != n or n < n_min:
        raise DomainError(f"n must be an integer >= {n_min}, got {n!r}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")


def sample_triangular_array(n, beta, stream, seed_path=()):
    """Independent ``X_i ~ chi(i beta)`` for ``i = 1..n``."""
    _check_nbeta(n, beta, 1)
    k = np.arange(1, n + 1, dtype=np.float64) * beta
    return TriangularSample(int(n), float(beta), sample_chi(k, stream), tuple(seed_path))


def sample_tridiagonal(n, beta, stream):
    """``H = sqrt(beta) H_{n,beta}``: ``N(0, 2)`` diagonal, off-diagonal ``j`` is ``chi((n-j) beta)``."""
    _check_nbeta(n, beta, 2)
    diag = stream.normal(0.0, _SQRT2, n)
    k = np.arange(n - 1, 0, -1, dtype=np.float64) * beta
    return TridiagonalMatrix(diag, sample_chi(k, stream), int(n))


def triangular_replica(n, beta, master_seed, replica):
    return sample_triangular_array(n, beta, replica_stream(master_seed, replica), (master_seed, replica))


def tridiagonal_replica(n, beta, master_seed, replica):
    return sample_tridiagonal(n, beta, replica_stream(master_seed, replica, n))


def resolve_threads(threads=None):
    """Worker count: explicit value, else ``$BETA_EXTREMES_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return int(threads)


def map_replicas(fn, replicas, threads=None):
    """``[fn(r) for r in replicas]`` evaluated on a thread pool, in input order."""
    replicas = list(replicas)
    threads = resolve_threads(threads)
    if threads == 1 or len(replicas) <= 1:
        return [fn(r) for r in replicas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, replicas))


# Binary dump: magic, kind, n, beta, master seed, replica, then float64 data.
MAGIC = b"BXCHI\x00\x01\x00"
_HEADER = struct.Struct("<8sBQdqq")
_KIND_ARRAY = 1
_KIND_TRIDIAGONAL = 2


def dump_sample(path, sample, master_seed=-1, replica=-1):
    """Write a TriangularSample or TridiagonalMatrix as little-endian binary."""
    if isinstance(sample, TriangularSample):
        kind, n, beta = _KIND_ARRAY, sample.n, sample.beta
        payload = sample.values
    elif isinstance(sample, TridiagonalMatrix):
        kind, n, beta = _KIND_TRIDIAGONAL, sample.n, math.nan
        payload = np.concatenate([sample.diagonal, sample.offdiagonal])
    else:
        raise TypeError(f"cannot dump {type(sample).__name__}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, kind, n, beta, master_seed, replica))
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def read_sample(path):
    """Inverse of :func:`dump_sample`; returns ``(sample, master_seed, replica)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, kind, n, beta, seed, replica = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a sample dump")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    if kind == _KIND_ARRAY:
        return TriangularSample(n, beta, data, (seed, replica)), seed, replica
    if kind == _KIND_TRIDIAGONAL:
        return TridiagonalMatrix(data[:n], data[n:], n), seed, replica
    raise ValueError(f"{path}: unknown sample kind {kind}")
