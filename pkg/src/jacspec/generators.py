"""Catalog of concrete block Jacobi families built from interaction data.

An interaction model is a block size p, a speed parameter c > 0, a positive
interval-length sequence d (indexed from 1), and one sequence of Hermitian
strength blocks, alpha or beta (also indexed from 1; the leading corner of
each family carries no interaction).  Entry magnitudes are computed in log
domain: weights like nu(d)/d^2 blow up as d shrinks, and families such as
d_n = 2**(-n**2) are representable only through the scaled block protocol
of BlockJacobiMatrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import blockmat
from .errors import ModelMismatchError, SingularBlockError
from .jacobi import BlockJacobiMatrix
from .sequences import ScalarSequence

FAMILY_NAMES = (
    "general",
    "dirac-alpha",
    "dirac-alpha-simple",
    "boundary-alpha",
    "dirac-beta",
    "dirac-beta-simple",
    "perturbed-alpha",
    "perturbed-beta",
    "schrodinger-j1",
    "schrodinger-j2",
    "dyukarev",
)

# fold the scale into the entries whenever comfortably representable
_FOLD_LIMIT = 200.0


def nu(x: float, c: float) -> float:
    """Interval weight c*x / sqrt(1 + c^2 x^2); lies in (0, min(c*x, 1))."""
    if x <= 0 or c <= 0:
        raise ValueError("nu requires x > 0 and c > 0")
    return c * x / math.hypot(1.0, c * x)


def log_nu(log_x: float, c: float) -> float:
    """log nu(x) from log x, stable for x far below double range."""
    t = math.log(c) + log_x
    return float(t - 0.5 * np.logaddexp(0.0, 2.0 * t))


def _emit(mag_log: float, base: np.ndarray):
    """Fold exp(mag_log) into the block when small enough, else keep the pair."""
    if abs(mag_log) < _FOLD_LIMIT:
        return base * math.exp(mag_log)
    return base, mag_log


# --- strength block sequences ------------------------------------------------


class BlockSequence:
    """Sequence of p-by-p strength blocks, indexed from 1."""

    def __init__(self, p: int):
        self.p = p

    def block(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def op_norms(self, ns: np.ndarray) -> np.ndarray:
        """Vectorized spectral norms; fast paths keep weighted-series probes cheap."""
        return np.array([blockmat.spec_norm(self.block(int(n))) for n in ns])


class ZeroBlocks(BlockSequence):
    def __init__(self, p: int):
        super().__init__(p)
        self._z = blockmat.zero(p)

    def block(self, n):
        return self._z

    def op_norms(self, ns):
        return np.zeros(len(ns))


class ConstantBlocks(BlockSequence):
    def __init__(self, matrix):
        m = blockmat.as_block(matrix)
        blockmat.require_hermitian(m, "constant strength block")
        super().__init__(m.shape[0])
        self._m = m
        self._norm = blockmat.spec_norm(m)

    def block(self, n):
        return self._m

    def op_norms(self, ns):
        return np.full(len(ns), self._norm)


class ScaledIdentityBlocks(BlockSequence):
    """block_n = s_n * I with s_n a (signed) scalar sequence."""

    def __init__(self, p: int, seq: ScalarSequence):
        super().__init__(p)
        self.seq = seq
        self._eye = blockmat.identity(p)

    def block(self, n):
        return self.seq.eval(n) * self._eye

    def op_norms(self, ns):
        return np.exp(self.seq.eval_log_many(np.asarray(ns, dtype=np.float64)))


class DiagonalBlocks(BlockSequence):
    """block_n = diag(s_1(n), ..., s_p(n)); slots are scalar sequences."""

    def __init__(self, slots):
        slots = list(slots)
        if not slots:
            raise ValueError("need at least one diagonal slot")
        super().__init__(len(slots))
        self.slots = slots

    def block(self, n):
        return np.diag([s.eval(n) for s in self.slots]).astype(np.complex128)

    def op_norms(self, ns):
        ns = np.asarray(ns, dtype=np.float64)
        mags = np.vstack([np.exp(s.eval_log_many(ns)) for s in self.slots])
        return mags.max(axis=0)


class SplitBlocks(BlockSequence):
    """block_n = upper_n (+) lower_n on an orthogonal two-block split."""

    def __init__(self, upper: BlockSequence, lower: BlockSequence):
        super().__init__(upper.p + lower.p)
        self.upper = upper
        self.lower = lower

    def block(self, n):
        out = blockmat.zero(self.p)
        p1 = self.upper.p
        out[:p1, :p1] = self.upper.block(n)
        out[p1:, p1:] = self.lower.block(n)
        return out

    def op_norms(self, ns):
        return np.maximum(self.upper.op_norms(ns), self.lower.op_norms(ns))


# --- interaction model --------------------------------------------------------


@dataclass(frozen=True)
class InteractionModel:
    """Point-interaction data: block size, speed c, lengths d, strengths."""

    p: int
    c: float
    d: ScalarSequence
    alpha: BlockSequence | None = None
    beta: BlockSequence | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.alpha is not None and self.beta is not None:
            raise ValueError("give alpha or beta, not both")
        for seq in (self.alpha, self.beta):
            if seq is not None and seq.p != self.p:
                raise ValueError("strength block size does not match p")
        if self.d.sign(1) < 0:
            raise ValueError("interval lengths must be positive")

    def d_log(self, n: int) -> float:
        return self.d.eval_log(n)

    def d_value(self, n: int) -> float:
        return math.exp(self.d_log(n))

    def require_alpha(self) -> BlockSequence:
        if self.alpha is None:
            raise ModelMismatchError("family needs an alpha strength sequence")
        return self.alpha

    def require_beta(self) -> BlockSequence:
        if self.beta is None:
            raise ModelMismatchError("family needs a beta strength sequence")
        return self.beta


@dataclass(frozen=True)
class PerturbationData:
    """Entrywise perturbations: Hermitian Aprime_n, Bprime_n, indexed from 0.

    Every I + Bprime_n must stay invertible; the off-diagonal check of the
    assembled family enforces it on access.
    """

    Aprime: BlockSequence
    Bprime: BlockSequence

    def aprime(self, n: int) -> np.ndarray:
        return self.Aprime.block(n + 1)  # BlockSequence indexes from 1

    def bprime(self, n: int) -> np.ndarray:
        b = self.Bprime.block(n + 1)
        sv = blockmat.singular_values(blockmat.identity(b.shape[0]) + b)
        if float(sv[-1]) <= blockmat.SINGULAR_RTOL * max(1.0, float(sv[0])):
            raise SingularBlockError(
                f"I + Bprime_{n} numerically singular", smallest_sv=float(sv[-1])
            )
        return b


def zero_perturbation(p: int) -> PerturbationData:
    return PerturbationData(Aprime=ZeroBlocks(p), Bprime=ZeroBlocks(p))


# --- families -----------------------------------------------------------------


def make_general(p: int, diag_seq: Callable[[int], np.ndarray], offdiag_seq: Callable[[int], np.ndarray], name: str = "general") -> BlockJacobiMatrix:
    """Wrap arbitrary block generators with the structural checks."""
    return BlockJacobiMatrix(p, diag_seq, offdiag_seq, name=name)


def make_dirac_alpha(model: InteractionModel) -> BlockJacobiMatrix:
    """Interleaved alpha family with nu-weights.

    Pattern (0-based, j >= 0): off-diagonals alternate nu(d_{j+1})/d_{j+1}^2 I
    and nu(d_{j+1})/(d_{j+1}^{3/2} d_{j+2}^{1/2}) I; odd diagonal blocks are
    -nu(d_{j+1})^2/d_{j+1}^2 I, even ones alpha_j/d_{j+1} with a zero corner.
    The squared weight on the odd diagonal is what the boundary-value maps
    produce (each of the two maps contributes one factor); it agrees with the
    beta family at zero strength and is the version whose kernel rank matches
    the maximal-index results.
    """
    alpha = model.require_alpha()
    p, c = model.p, model.c
    eye = blockmat.identity(p)
    zero = blockmat.zero(p)

    def diag(n):
        j, r = divmod(n, 2)
        ld = model.d_log(j + 1)
        if r == 0:
            if j == 0:
                return zero
            return _emit(-ld, alpha.block(j))
        return _emit(2.0 * log_nu(ld, c) - 2.0 * ld, -eye)

    def offdiag(n):
        j, r = divmod(n, 2)
        ld = model.d_log(j + 1)
        if r == 0:
            s = log_nu(ld, c) - 2.0 * ld
        else:
            s = log_nu(ld, c) - 1.5 * ld - 0.5 * model.d_log(j + 2)
        return _emit(s, eye)

    return BlockJacobiMatrix(p, diag, offdiag, name="dirac-alpha")


def make_dirac_alpha_simple(model: InteractionModel) -> BlockJacobiMatrix:
    """Same pattern as the alpha family with nu(d) replaced by c*d.

    The substitution makes the odd diagonal the constant -c^2 I.
    """
    alpha = model.require_alpha()
    p, c = model.p, model.c
    eye = blockmat.identity(p)
    zero = blockmat.zero(p)
    logc = math.log(c)

    def diag(n):
        j, r = divmod(n, 2)
        ld = model.d_log(j + 1)
        if r == 0:
            if j == 0:
                return zero
            return _emit(-ld, alpha.block(j))
        return _emit(2.0 * logc, -eye)

    def offdiag(n):
        j, r = divmod(n, 2)
        ld = model.d_log(j + 1)
        if r == 0:
            s = logc - ld
        else:
            s = logc - 0.5 * (ld + model.d_log(j + 2))
        return _emit(s, eye)

    return BlockJacobiMatrix(p, diag, offdiag, name="dirac-alpha-simple")


def make_boundary_alpha(model: InteractionModel) -> BlockJacobiMatrix:
    """Alpha family with every even-indexed off-diagonal block negated.

    Diagonally sign-conjugate to the plain alpha family, so truncation
    spectra agree; the sign pattern matches the boundary-operator form.
    """
    base = make_dirac_alpha(model)

    def offdiag(n):
        block, scale = base.offdiag_scaled(n)
        return (-block, scale) if n % 2 == 0 else (block, scale)

    return BlockJacobiMatrix(model.p, base.diag_scaled, offdiag, name="boundary-alpha")


def make_dirac_beta(model: InteractionModel) -> BlockJacobiMatrix:
    """Beta family: zero even diagonal, odd diagonal
    -nu(d_j)^2/d_j^3 (beta_j + d_j I); same off-diagonals as the alpha family."""
    beta = model.require_beta()
    p, c = model.p, model.c
    eye = blockmat.identity(p)
    zero = blockmat.zero(p)

    def diag(n):
        j, r = divmod(n, 2)
        if r == 0:
            return zero
        ld = model.d_log(j + 1)
        base = beta.block(j + 1) + model.d_value(j + 1) * eye
        return _emit(2.0 * log_nu(ld, c) - 3.0 * ld, -base)

    alpha_like = make_dirac_alpha(
        InteractionModel(p=p, c=c, d=model.d, alpha=ZeroBlocks(p))
    )
    return BlockJacobiMatrix(p, diag, alpha_like.offdiag_scaled, name="dirac-beta")


def make_dirac_beta_simple(model: InteractionModel) -> BlockJacobiMatrix:
    """Beta family with nu(d) replaced by c*d: odd diagonal -c^2/d_j (beta_j + d_j I)."""
    beta = model.require_beta()
    p, c = model.p, model.c
    eye = blockmat.identity(p)
    zero = blockmat.zero(p)
    logc = math.log(c)

    def diag(n):
        j, r = divmod(n, 2)
        if r == 0:
            return zero
        ld = model.d_log(j + 1)
        base = beta.block(j + 1) + model.d_value(j + 1) * eye
        return _emit(2.0 * logc - ld, -base)

    simple = make_dirac_alpha_simple(
        InteractionModel(p=p, c=c, d=model.d, alpha=ZeroBlocks(p))
    )
    return BlockJacobiMatrix(p, diag, simple.offdiag_scaled, name="dirac-beta-simple")


def make_perturbed_alpha(model: InteractionModel, pert: PerturbationData) -> BlockJacobiMatrix:
    """Alpha family with entrywise perturbations.

    Off-diagonals gain a factor (I + Bprime_n); diagonal blocks follow the
    visible period-2 pattern: corner Aprime_0, odd blocks
    -(nu(d_{j+1})/d_{j+1})^2 (I + Aprime_{2j+1}), even blocks
    (alpha_j/d_{j+1})(I + Aprime_{2j}).
    """
    alpha = model.require_alpha()
    p, c = model.p, model.c
    eye = blockmat.identity(p)

    def diag(n):
        j, r = divmod(n, 2)
        if r == 0:
            if j == 0:
                return pert.aprime(0)
            base = alpha.block(j) @ (eye + pert.aprime(n))
            return _emit(-model.d_log(j + 1), base)
        ld = model.d_log(j + 1)
        return _emit(2.0 * log_nu(ld, c) - 2.0 * ld, -(eye + pert.aprime(n)))

    def offdiag(n):
        j, r = divmod(n, 2)
        ld = model.d_log(j + 1)
        if r == 0:
            s = log_nu(ld, c) - 2.0 * ld
        else:
            s = log_nu(ld, c) - 1.5 * ld - 0.5 * model.d_log(j + 2)
        return _emit(s, eye + pert.bprime(n))

    return BlockJacobiMatrix(p, diag, offdiag, name="perturbed-alpha")


def make_perturbed_beta(model: InteractionModel, pert: PerturbationData) -> BlockJacobiMatrix:
    """Beta family with entrywise perturbations; odd diagonal blocks are
    -nu(d_{j+1})^2/d_{j+1}^3 (beta_{j+1} + d_{j+1} I + Aprime_{2j+1})."""
    beta = model.require_beta()
    p, c = model.p, model.c
    eye = blockmat.identity(p)

    def diag(n):
        j, r = divmod(n, 2)
        if r == 0:
            return pert.aprime(0) if j == 0 else pert.aprime(n)
        ld = model.d_log(j + 1)
        base = beta.block(j + 1) + model.d_value(j + 1) * eye + pert.aprime(n)
        return _emit(2.0 * log_nu(ld, c) - 3.0 * ld, -base)

    def offdiag(n):
        j, r = divmod(n, 2)
        ld = model.d_log(j + 1)
        if r == 0:
            s = log_nu(ld, c) - 2.0 * ld
        else:
            s = log_nu(ld, c) - 1.5 * ld - 0.5 * model.d_log(j + 2)
        return _emit(s, eye + pert.bprime(n))

    return BlockJacobiMatrix(p, diag, offdiag, name="perturbed-beta")


def schrodinger_alpha_tilde(model: InteractionModel, n: int) -> tuple[np.ndarray, float]:
    """Shifted strength (alpha_n + (1/d_n + 1/d_{n+1}) I) as a scaled block."""
    alpha = model.require_alpha()
    w_log = float(np.logaddexp(-model.d_log(n), -model.d_log(n + 1)))
    base = alpha.block(n) * math.exp(-w_log) + blockmat.identity(model.p)
    return base, w_log


def make_schrodinger_J1(model: InteractionModel) -> BlockJacobiMatrix:
    """Second-difference family with r_n = sqrt(d_n + d_{n+1}) weights.

    Diagonal block n carries the shifted strength at n+1 over r_{n+1}^2;
    off-diagonal block n is I/(r_{n+1} r_{n+2} d_{n+2}).
    """
    model.require_alpha()
    p = model.p
    eye = blockmat.identity(p)

    def log_r(k):
        return 0.5 * float(np.logaddexp(model.d_log(k), model.d_log(k + 1)))

    def diag(n):
        base, w_log = schrodinger_alpha_tilde(model, n + 1)
        return _emit(w_log - 2.0 * log_r(n + 1), base)

    def offdiag(n):
        s = -(log_r(n + 1) + log_r(n + 2) + model.d_log(n + 2))
        return _emit(s, eye)

    return BlockJacobiMatrix(p, diag, offdiag, name="schrodinger-j1")


def make_schrodinger_J2(model: InteractionModel) -> BlockJacobiMatrix:
    """Interleaved family with plain 1/d^2 weights (no nu factor)."""
    alpha = model.require_alpha()
    p = model.p
    eye = blockmat.identity(p)
    zero = blockmat.zero(p)

    def diag(n):
        j, r = divmod(n, 2)
        if r == 0:
            if j == 0:
                return zero
            return _emit(-model.d_log(j + 1), alpha.block(j))
        return _emit(-2.0 * model.d_log(j + 1), -eye)

    def offdiag(n):
        j, r = divmod(n, 2)
        ld = model.d_log(j + 1)
        if r == 0:
            s = -2.0 * ld
        else:
            s = -(1.5 * ld + 0.5 * model.d_log(j + 2))
        return _emit(s, eye)

    return BlockJacobiMatrix(p, diag, offdiag, name="schrodinger-j2")


def dyukarev_btilde(n: int, p: int, p1: int) -> np.ndarray:
    vals = [1.0 / (n + 1)] * p1 + [1.0] * (p - p1)
    return np.diag(vals).astype(np.complex128)


def make_dyukarev(p: int, p1: int) -> BlockJacobiMatrix:
    """Zero-diagonal family with split growth on the off-diagonal.

    offdiag_0 = I; for n >= 1, offdiag_n = btilde_{n-1}^{-1} R_n btilde_n^{-1}
    with R_n = sqrt(I + btilde_{n-1}^2), which evaluates to (n+1) sqrt(n^2+1)
    on the first p1 slots and sqrt(2) on the rest.
    """
    if not (0 <= p1 <= p):
        raise ValueError("need 0 <= p1 <= p")
    zero = blockmat.zero(p)

    def diag(n):
        return zero

    def offdiag(n):
        bt = dyukarev_btilde(n, p, p1)
        if n == 0:
            return bt
        bprev = dyukarev_btilde(n - 1, p, p1)
        r = np.sqrt(blockmat.identity(p) + bprev @ bprev)
        return np.linalg.inv(bprev) @ r @ np.linalg.inv(bt)

    return BlockJacobiMatrix(p, diag, offdiag, name="dyukarev")


def make_family(name: str, model: InteractionModel | None = None, *, pert: PerturbationData | None = None, p: int | None = None, p1: int | None = None) -> BlockJacobiMatrix:
    """Dispatch by the config-schema family name."""
    if name == "dyukarev":
        if p is None or p1 is None:
            raise ModelMismatchError("dyukarev needs p and p1")
        return make_dyukarev(p, p1)
    if model is None:
        raise ModelMismatchError(f"family {name!r} needs an interaction model")
    table = {
        "dirac-alpha": make_dirac_alpha,
        "dirac-alpha-simple": make_dirac_alpha_simple,
        "boundary-alpha": make_boundary_alpha,
        "dirac-beta": make_dirac_beta,
        "dirac-beta-simple": make_dirac_beta_simple,
        "schrodinger-j1": make_schrodinger_J1,
        "schrodinger-j2": make_schrodinger_J2,
    }
    if name in table:
        return table[name](model)
    if name == "perturbed-alpha":
        return make_perturbed_alpha(model, pert or zero_perturbation(model.p))
    if name == "perturbed-beta":
        return make_perturbed_beta(model, pert or zero_perturbation(model.p))
    raise ModelMismatchError(f"unknown family {name!r}")
