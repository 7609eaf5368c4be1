"""Lazy block-tridiagonal matrices with checked, cached block access.

A family is defined by two generators for the diagonal blocks (Hermitian)
and first off-diagonal blocks (invertible).  Generators may return either a
plain block or a (block, log_scale) pair; the pair form keeps families with
extreme entry magnitudes representable, with the true block equal to
exp(log_scale) * block.  Block indices are 0-based throughout.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import blockmat
from .errors import CapExceededError, DynamicRangeError, SingularBlockError

DENSE_CAP = 8192
# natural-log spread tolerated in one dense assembly (~1e300 dynamic range)
DENSE_LOG_RANGE = 300.0 * math.log(10.0)
MATERIALIZE_LOG_LIMIT = 700.0

BlockFn = Callable[[int], "np.ndarray | tuple[np.ndarray, float]"]


def _normalize(raw) -> tuple[np.ndarray, float]:
    if isinstance(raw, tuple):
        block, scale = raw
    else:
        block, scale = raw, 0.0
    block = np.asarray(block, dtype=np.complex128)
    return block, float(scale)


@dataclass(frozen=True)
class DenseTruncation:
    """Leading N-by-N block submatrix, assembled Hermitian by construction."""

    N: int
    p: int
    H: np.ndarray


class BlockJacobiMatrix:
    """Uniform access to (diag_n, offdiag_n) with prefix caching.

    Access validates the structural contract: every diagonal block must be
    Hermitian, every off-diagonal block invertible (smallest singular value
    above 1e-13 of its norm).  Cached blocks are immutable; cache extension
    is serialized so warmed-up matrices are safe to share across workers.
    """

    def __init__(self, p: int, diag: BlockFn, offdiag: BlockFn, name: str = "", check: bool = True):
        if p < 1:
            raise ValueError("block dimension must be >= 1")
        self.p = p
        self.name = name
        self._diag_fn = diag
        self._offdiag_fn = offdiag
        self._check = check
        self._diag_cache: list[tuple[np.ndarray, float]] = []
        self._offdiag_cache: list[tuple[np.ndarray, float]] = []
        self._lock = threading.Lock()

    # -- scaled access --------------------------------------------------

    def diag_scaled(self, n: int) -> tuple[np.ndarray, float]:
        """(block, log_scale) with true diag_n = exp(log_scale) * block."""
        self._fill(self._diag_cache, self._diag_fn, n, is_diag=True)
        return self._diag_cache[n]

    def offdiag_scaled(self, n: int) -> tuple[np.ndarray, float]:
        self._fill(self._offdiag_cache, self._offdiag_fn, n, is_diag=False)
        return self._offdiag_cache[n]

    def _fill(self, cache, fn, n, is_diag):
        if n < 0:
            raise IndexError("block index must be >= 0")
        if n < len(cache):
            return
        with self._lock:
            while len(cache) <= n:
                k = len(cache)
                block, scale = _normalize(fn(k))
                if block.shape != (self.p, self.p):
                    raise ValueError(
                        f"{self.name or 'family'}: block {k} has shape {block.shape}, "
                        f"expected ({self.p}, {self.p})"
                    )
                if self._check:
                    if is_diag:
                        blockmat.require_hermitian(block, f"diag block {k} of {self.name or 'family'}")
                    else:
                        sv = blockmat.singular_values(block)
                        if float(sv[-1]) <= blockmat.SINGULAR_RTOL * float(sv[0]):
                            raise SingularBlockError(
                                f"{self.name or 'family'}: off-diagonal block {k} "
                                f"numerically singular (smallest sv {float(sv[-1]):.3e})",
                                smallest_sv=float(sv[-1]),
                            )
                block = block.copy()
                block.flags.writeable = False
                cache.append((block, scale))

    # -- plain access ---------------------------------------------------

    def _materialize(self, pair: tuple[np.ndarray, float], what: str, n: int) -> np.ndarray:
        block, scale = pair
        if scale == 0.0:
            return block
        top = scale + (math.log(blockmat.spec_norm(block)) if np.any(block) else 0.0)
        if abs(top) > MATERIALIZE_LOG_LIMIT or abs(scale) > MATERIALIZE_LOG_LIMIT:
            raise DynamicRangeError(
                f"{what} block {n}: log magnitude {scale:.1f} not representable; "
                "use the scaled accessors"
            )
        return block * math.exp(scale)

    def diag_block(self, n: int) -> np.ndarray:
        return self._materialize(self.diag_scaled(n), "diagonal", n)

    def offdiag_block(self, n: int) -> np.ndarray:
        return self._materialize(self.offdiag_scaled(n), "off-diagonal", n)

    def scale_hint(self, n: int) -> float:
        """Larger of the diagonal/off-diagonal log scales at index n."""
        return max(abs(self.diag_scaled(n)[1]), abs(self.offdiag_scaled(n)[1]))

    def diag_log_norm(self, n: int) -> float:
        block, scale = self.diag_scaled(n)
        nrm = blockmat.spec_norm(block)
        return -math.inf if nrm == 0.0 else scale + math.log(nrm)

    def offdiag_log_norm(self, n: int) -> float:
        block, scale = self.offdiag_scaled(n)
        return scale + math.log(blockmat.spec_norm(block))

    def warm_up(self, horizon: int) -> None:
        """Extend both caches to the given block index (thread-safe after)."""
        self.diag_scaled(horizon)
        self.offdiag_scaled(horizon)

    # -- dense / action -------------------------------------------------

    def truncate_dense(self, N: int, cap: int = DENSE_CAP) -> DenseTruncation:
        """Assemble the leading N-block principal submatrix."""
        if N < 1:
            raise ValueError("N must be >= 1")
        if N * self.p > cap:
            raise CapExceededError(f"dense truncation {N}x{N} blocks of size {self.p} exceeds cap {cap}")
        self.warm_up(N - 1)
        scales = []
        for n in range(N):
            db, ds = self.diag_scaled(n)
            scales.append(ds + (math.log(blockmat.spec_norm(db)) if np.any(db) else 0.0))
            if n < N - 1:
                scales.append(self.offdiag_log_norm(n))
        if max(scales) - min(scales) > DENSE_LOG_RANGE:
            raise DynamicRangeError(
                f"entry magnitudes span e^{max(scales) - min(scales):.0f} over {N} blocks; "
                "dense assembly refused"
            )
        p = self.p
        H = np.zeros((N * p, N * p), dtype=np.complex128)
        for n in range(N):
            H[n * p:(n + 1) * p, n * p:(n + 1) * p] = self.diag_block(n)
            if n < N - 1:
                b = self.offdiag_block(n)
                H[n * p:(n + 1) * p, (n + 1) * p:(n + 2) * p] = b
                H[(n + 1) * p:(n + 2) * p, n * p:(n + 1) * p] = b.conj().T
        H = 0.5 * (H + H.conj().T)  # exact Hermitian symmetry of the assembly
        H.flags.writeable = False
        return DenseTruncation(N=N, p=p, H=H)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Tridiagonal action on a finite block vector (trailing blocks zero).

        Component n is offdiag_{n-1}^* v_{n-1} + diag_n v_n + offdiag_n v_{n+1}
        with v_{-1} = 0 and v_m = 0 past the end of the input.
        """
        v = np.asarray(v, dtype=np.complex128)
        flat = v.ndim == 1
        if flat:
            if v.size % self.p:
                raise ValueError("flat vector length must be a multiple of p")
            v = v.reshape(-1, self.p)
        m = v.shape[0]
        out = np.zeros_like(v)
        for n in range(m):
            acc = self.diag_block(n) @ v[n]
            if n > 0:
                acc = acc + self.offdiag_block(n - 1).conj().T @ v[n - 1]
            if n < m - 1:
                acc = acc + self.offdiag_block(n) @ v[n + 1]
            out[n] = acc
        return out.reshape(-1) if flat else out
