import math

import numpy as np
import pytest

from jacspec import generators as gen
from jacspec.sequences import Power, ProductWeighted


def scalar_family(afn, bfn, name="scalar"):
    return gen.make_general(
        1,
        lambda n: np.array([[afn(n)]], dtype=complex),
        lambda n: np.array([[bfn(n)]], dtype=complex),
        name=name,
    )


@pytest.fixture
def free_scalar():
    return scalar_family(lambda n: 0.0, lambda n: 1.0, name="free")


@pytest.fixture
def grow_scalar():
    # a_n = (n+1)^2, b_n = n+1
    return scalar_family(lambda n: (n + 1) ** 2, lambda n: n + 1, name="grow")


def d36():
    # d_n = 36^-(n-1) / n^2
    return ProductWeighted(Power(-2.0), math.log(1.0 / 36.0))


def model_zero_alpha(dseq, p=1, c=1.0):
    return gen.InteractionModel(p=p, c=c, d=dseq, alpha=gen.ZeroBlocks(p))


def model_const_alpha(dseq, a, p=1, c=1.0):
    return gen.InteractionModel(
        p=p, c=c, d=dseq, alpha=gen.ScaledIdentityBlocks(p, Power(0.0, a)))


def max_sa_model(p=1, r=5.0, c=1.0):
    # d_n = (1+r)^{-2(n-1)} / n^2, alpha = r c I
    d = ProductWeighted(Power(-2.0), 2.0 * math.log(1.0 / (1.0 + r)))
    return gen.InteractionModel(
        p=p, c=c, d=d, alpha=gen.ScaledIdentityBlocks(p, Power(0.0, r * c)))


def display_alpha_family(model):
    """Interleaved alpha family with the single-power odd diagonal.

    Kept for the comparison computations that are stated for this variant
    (alternating-product sandwich growth, modulus-weight reduction).
    """
    alpha = model.alpha
    p, c = model.p, model.c
    eye = np.eye(p, dtype=complex)
    base = gen.make_dirac_alpha(model)

    def diag(n):
        j, r = divmod(n, 2)
        if r == 1:
            ld = model.d_log(j + 1)
            return gen._emit(gen.log_nu(ld, c) - 2.0 * ld, -eye)
        if j == 0:
            return np.zeros((p, p), dtype=complex)
        return gen._emit(-model.d_log(j + 1), alpha.block(j))

    return gen.BlockJacobiMatrix(p, diag, base.offdiag_scaled, name="dirac-alpha-display")
