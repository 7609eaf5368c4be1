import math

import numpy as np
import pytest

from jacspec import generators as gen, indices as idx
from jacspec.errors import RecursionOverflowError
from jacspec.sequences import Geometric, Power, SuperExp

from conftest import max_sa_model, model_zero_alpha, scalar_family

RNG = np.random.default_rng(991)


def unscaled_P(state):
    return state.P_curr * math.exp(state.log_scale)


def test_free_scalar_cycle_at_zero(free_scalar):
    vals = [s.P_curr[0, 0] * math.exp(s.log_scale)
            for s in idx.krein_states(free_scalar, 0j, 8)]
    assert np.allclose(vals, [1, 0, -1, 0, 1, 0, -1, 0, 1])


def test_free_scalar_fibonacci_moduli(free_scalar):
    mods = [abs(s.P_curr[0, 0]) * math.exp(s.log_scale)
            for s in idx.krein_states(free_scalar, 1j, 6)]
    assert np.allclose(mods, [1, 1, 2, 3, 5, 8, 13], rtol=1e-12)


def test_first_polynomial_value(grow_scalar):
    state = idx.krein_init(grow_scalar, 0.5 + 1j)
    state = idx.krein_step(state, grow_scalar)
    # offdiag_0^{-1} (z - diag_0)
    assert unscaled_P(state)[0, 0] == pytest.approx((0.5 + 1j - 1.0) / 1.0)


def test_kernel_partial_base_cases(free_scalar):
    S, log_s = idx.kernel_partial(free_scalar, 0.7j, 0)
    assert np.allclose(S * math.exp(log_s), np.eye(1))
    S, log_s = idx.kernel_partial(free_scalar, 0j, 4)
    assert S[0, 0].real * math.exp(log_s) == pytest.approx(3.0)


def test_kernel_partial_hermitian_psd():
    for _ in range(5):
        p = 2
        diag_mats = [None]

        def diag(n):
            m = RNG.normal(size=(p, p)) + 1j * RNG.normal(size=(p, p))
            return m + m.conj().T

        def offdiag(n):
            m = RNG.normal(size=(p, p)) + 1j * RNG.normal(size=(p, p))
            return m + 3.0 * np.eye(p)

        J = gen.make_general(p, diag, offdiag)
        S, _ = idx.kernel_partial(J, 1j, 30)
        assert np.allclose(S, S.conj().T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(S)) > -1e-12


def test_three_term_residuals_all_families():
    fams = [
        scalar_family(lambda n: 0.0, lambda n: 1.0),
        gen.make_dyukarev(2, 1),
        gen.make_dirac_alpha(model_zero_alpha(Geometric(0.5))),
        gen.make_dirac_alpha(max_sa_model()),
        gen.make_dirac_beta(gen.InteractionModel(
            p=1, c=1.0, d=SuperExp(2.0, 2.0),
            beta=gen.ScaledIdentityBlocks(1, Power(0.0, 1.0)))),
    ]
    for J in fams:
        for z in (1j, 1.0 + 1j):
            res = idx.three_term_residuals(J, z, 500)
            assert res.max() <= 1e-10


def test_ladder_antitone(free_scalar):
    est = idx.estimate_index(gen.make_dyukarev(2, 1), z_points=(1j,), ladder_max=512)
    per_z = [np.asarray(r["log10_eigs"]) for r in est.ladder]
    for a, b in zip(per_z, per_z[1:]):
        assert np.all(b <= a + 1e-10)


def test_estimate_free_scalar(free_scalar):
    est = idx.estimate_index(free_scalar, ladder_max=1024)
    assert (est.n_plus, est.n_minus, est.stabilized) == (0, 0, True)


def test_estimate_alpha_zero_families():
    est = idx.estimate_index(gen.make_dirac_alpha(model_zero_alpha(Geometric(0.5))),
                             ladder_max=2048)
    assert (est.n_plus, est.n_minus) == (1, 1) and est.stabilized
    est = idx.estimate_index(gen.make_dirac_alpha(model_zero_alpha(Power(-1.0))),
                             ladder_max=2048)
    assert (est.n_plus, est.n_minus) == (0, 0)


def test_estimate_dyukarev_split():
    for (p, p1) in ((2, 1), (3, 2), (2, 0)):
        est = idx.estimate_index(gen.make_dyukarev(p, p1), z_points=(1j, -1j),
                                 ladder_max=2048)
        assert (est.n_plus, est.n_minus) == (p1, p1)
        assert est.stabilized


def test_estimate_conjugate_symmetry():
    J = gen.make_dyukarev(2, 1)
    a = idx.estimate_index(J, z_points=(1j,), ladder_max=1024)
    b = idx.estimate_index(J, z_points=(-1j,), ladder_max=1024)
    assert a.n_plus == b.n_minus


def test_estimate_rejects_real_points(free_scalar):
    with pytest.raises(ValueError):
        idx.estimate_index(free_scalar, z_points=(1.0,))


def test_defect_alpha_zero_closed_form():
    m = model_zero_alpha(Geometric(0.5))
    sol = idx.dirac_defect_recursion(m, 50)
    x = 0.0
    for n in range(50):
        x += m.d_value(n + 1)
        lu = sol.log_scales[n] + math.log(np.linalg.norm(sol.U[n], 2))
        lv = sol.log_scales[n] + math.log(np.linalg.norm(sol.V[n], 2))
        assert lu == pytest.approx(x, abs=1e-12 * max(1.0, abs(x)))
        assert lv == pytest.approx(-x, abs=1e-12 * max(1.0, abs(x)))


def test_defect_interface_identities():
    m = max_sa_model(p=2)
    sol = idx.dirac_defect_recursion(m, 120)
    c = m.c
    for n in range(119):
        t = m.d_value(n + 2) / c
        lhs_c = sol.U[n + 1] * math.exp(-t) + sol.V[n + 1] * math.exp(t)
        a = m.alpha.block(n + 1)
        lhs_j = (sol.U[n + 1] * math.exp(-t) - sol.V[n + 1] * math.exp(t))
        shift = math.exp(sol.log_scales[n] - sol.log_scales[n + 1])
        rhs_c = (sol.U[n] + sol.V[n]) * shift
        rhs_j = (sol.U[n] - sol.V[n]) * shift - 1j * (a / c) @ (sol.U[n] + sol.V[n]) * shift
        scale = max(np.linalg.norm(lhs_c, 2), np.linalg.norm(rhs_c, 2), 1e-300)
        assert np.linalg.norm(lhs_c - rhs_c, 2) <= 1e-10 * scale
        scale = max(np.linalg.norm(lhs_j, 2), np.linalg.norm(rhs_j, 2), 1e-300)
        assert np.linalg.norm(lhs_j - rhs_j, 2) <= 1e-10 * scale


def test_defect_norm_bound_random_draws():
    # product-exponential bound over random Hermitian strengths
    for trial in range(100):
        p = int(RNG.integers(1, 3))
        mats = []
        for _ in range(200):
            m = RNG.normal(size=(p, p)) + 1j * RNG.normal(size=(p, p))
            m = m + m.conj().T
            m *= RNG.uniform(0.1, 10.0) / max(np.linalg.norm(m, 2), 1e-9)
            mats.append(m)

        class Draw(gen.BlockSequence):
            def block(self, n):
                return mats[n - 1]

        model = gen.InteractionModel(p=p, c=1.0, d=Power(-2.0), alpha=Draw(p))
        sol = idx.dirac_defect_recursion(model, 200)
        lu, lv = sol.norms()
        x = np.cumsum([model.d_value(k) for k in range(1, 201)])
        prod = np.concatenate([[0.0], np.cumsum(
            [math.log1p(np.linalg.norm(mats[k], 2)) for k in range(199)])])
        bound = x + prod
        assert np.all(lu <= bound + 1e-9)
        assert np.all(lv <= bound + 1e-9)
        assert np.min(sol.rank_witness) > 1e-8


def test_defect_index_routes():
    est = idx.dirac_index_estimate(max_sa_model(p=2), 400)
    assert est.n_plus == 2 and est.stabilized
    est = idx.dirac_index_estimate(model_zero_alpha(Power(-1.0)), 3000)
    assert est.n_plus == 0 and est.stabilized
    est = idx.dirac_index_estimate(model_zero_alpha(Geometric(0.5)), 400)
    assert est.n_plus == 1 and est.stabilized


def test_cross_method_agreement():
    pairs = [
        (model_zero_alpha(Geometric(0.5)), 400),
        (model_zero_alpha(Power(-1.0)), 3000),
        (max_sa_model(p=1), 400),
        (max_sa_model(p=2), 400),
    ]
    for model, depth in pairs:
        a = idx.dirac_index_estimate(model, depth)
        b = idx.estimate_index(gen.make_dirac_alpha(model), ladder_max=2048)
        assert (a.n_plus, a.n_minus) == (b.n_plus, b.n_minus)


def test_recursion_overflow_reported():
    # interval too long for the exponential stretch
    m = model_zero_alpha(Power(0.0, 1e6))
    with pytest.raises(RecursionOverflowError):
        idx.dirac_defect_recursion(m, 10)
