"""Small dense complex-matrix kernel.

Every block handled by the package is a p-by-p complex ndarray with p small
(a few, rarely above 16).  Hermitian eigendecomposition, inversion, the
spectral norm, and the modulus inverse square root live here; all weighted
criteria are built on top of these four operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NearKernelError,
    NoConvergenceError,
    NotHermitianError,
    SingularBlockError,
)

HERMITIAN_RTOL = 1e-12
SINGULAR_RTOL = 1e-13
KERNEL_RTOL = 1e-12


def as_block(entries) -> np.ndarray:
    """Validate and return a square complex128 block (read-only copy)."""
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"block must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("block has non-finite entries")
    m.flags.writeable = False
    return m


def identity(p: int) -> np.ndarray:
    return np.eye(p, dtype=np.complex128)


def zero(p: int) -> np.ndarray:
    return np.zeros((p, p), dtype=np.complex128)


def adjoint(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def spec_norm(m: np.ndarray) -> float:
    """Largest singular value; 0 for the zero block."""
    if m.size == 1:
        return abs(complex(m[0, 0]))
    if not np.any(m):
        return 0.0
    return float(np.linalg.norm(m, 2))


def hermitian_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermitian_defect(m) <= rtol * (1.0 + spec_norm(m))


def require_hermitian(m: np.ndarray, context: str = "") -> None:
    if not is_hermitian(m):
        raise NotHermitianError(
            f"block is not Hermitian{' in ' + context if context else ''}: "
            f"defect {hermitian_defect(m):.3e}"
        )


@dataclass(frozen=True)
class HermEigResult:
    """Ascending eigenvalues and a unitary diagonalizing factor."""

    eigenvalues: np.ndarray  # real, ascending
    vectors: np.ndarray      # columns are eigenvectors


def herm_eig(m: np.ndarray) -> HermEigResult:
    """Eigendecomposition of a Hermitian block.

    Raises NotHermitian when the input fails the Hermitian tolerance and
    NoConvergence when the underlying iteration gives up.
    """
    require_hermitian(m)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise NoConvergenceError(str(exc)) from exc
    return HermEigResult(eigenvalues=w, vectors=v)


def singular_values(m: np.ndarray) -> np.ndarray:
    return np.linalg.svd(m, compute_uv=False)


def inv(m: np.ndarray) -> np.ndarray:
    """Inverse with an explicit near-singularity guard."""
    sv = singular_values(m)
    smallest = float(sv[-1])
    if smallest <= SINGULAR_RTOL * float(sv[0]):
        raise SingularBlockError(
            f"block numerically singular (smallest sv {smallest:.3e})",
            smallest_sv=smallest,
        )
    return np.linalg.inv(m)


def abs_inv_sqrt(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|M|^(-1/2) together with the sign factor of the polar decomposition.

    M must be Hermitian with no eigenvalue within KERNEL_RTOL * ||M|| of
    zero; otherwise NearKernel is raised, which the criteria translate to
    an Inconclusive verdict.
    """
    eig = herm_eig(m)
    w = eig.eigenvalues
    scale = max(float(np.max(np.abs(w))), spec_norm(m))
    if scale == 0.0 or float(np.min(np.abs(w))) <= KERNEL_RTOL * scale:
        raise NearKernelError(
            f"eigenvalue within {KERNEL_RTOL:g}*norm of zero (min |eig| "
            f"{float(np.min(np.abs(w))) if scale else 0.0:.3e})"
        )
    v = eig.vectors
    r = (v * (np.abs(w) ** -0.5)) @ v.conj().T
    sign = (v * np.sign(w)) @ v.conj().T
    return r, sign
