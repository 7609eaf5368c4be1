import math

import numpy as np
import pytest

from jacspec import criteria as cr, generators as gen
from jacspec.criteria import CriteriaOptions, INCONCLUSIVE, SATISFIED, VIOLATED
from jacspec.sequences import DyukarevD, Explicit, Geometric, Power, SuperExp

from conftest import (
    d36,
    display_alpha_family,
    max_sa_model,
    model_const_alpha,
    model_zero_alpha,
    scalar_family,
)

FAST = CriteriaOptions(n_max=1500)


class NegDyukarev(DyukarevD):
    def sign(self, n):
        return -1


def dyukarev_beta_model(p=1, c=1.0):
    return gen.InteractionModel(p=p, c=c, d=DyukarevD(c),
                                beta=gen.ScaledIdentityBlocks(p, NegDyukarev(c)))


# --- carleman -------------------------------------------------------------


def test_carleman_free(free_scalar):
    r = cr.carleman(free_scalar, FAST)
    assert r.verdict == SATISFIED
    assert "selfadjoint" in r.implied_property


def test_carleman_simple_family_harmonic():
    # inverse norms of the c*d weights behave like the interval lengths
    m = model_zero_alpha(Power(-1.0))
    r = cr.carleman(gen.make_dirac_alpha_simple(m), CriteriaOptions(n_max=60_000))
    assert r.verdict == SATISFIED


def test_carleman_summable_is_inconclusive():
    m = model_zero_alpha(Geometric(0.5))
    r = cr.carleman(gen.make_dirac_alpha(m), FAST)
    assert r.verdict == INCONCLUSIVE
    assert r.evidence["condition_met"] == 0.0


# --- neighbour-sum bounds ---------------------------------------------------


def test_a1a2_growing_family(grow_scalar):
    r = cr.selfadjoint_a1a2(grow_scalar, CriteriaOptions(n_max=1500, start=3))
    assert r.verdict == SATISFIED
    assert r.evidence["a1"] == pytest.approx(7.0 / 16.0)


def test_a1a2_constant_families():
    ones = scalar_family(lambda n: 1.0, lambda n: 1.0)
    r = cr.selfadjoint_a1a2(ones, FAST)
    assert r.verdict == INCONCLUSIVE
    quarter = scalar_family(lambda n: 1.0, lambda n: 0.25)
    r = cr.selfadjoint_a1a2(quarter, FAST)
    assert r.verdict == SATISFIED
    assert r.evidence["product"] == pytest.approx(0.25)


def test_a1a2_singular_diagonal_guard(free_scalar):
    r = cr.selfadjoint_a1a2(free_scalar, FAST)
    assert r.verdict == INCONCLUSIVE
    assert "guard_singular_diagonal" in r.evidence


def test_power_mean_variants():
    quarter = scalar_family(lambda n: 1.0, lambda n: 0.25)
    r = cr.selfadjoint_power_mean(quarter, CriteriaOptions(n_max=1500, s=1.0))
    assert r.verdict == SATISFIED
    assert r.evidence["b1"] == pytest.approx(0.5)
    # pairwise route: sup 1/4 < 1/2 even when s-sums sit at the bound
    r2 = cr.selfadjoint_power_mean(quarter, CriteriaOptions(n_max=1500, s=2.0))
    assert r2.verdict == SATISFIED


def test_power_mean_monotone_in_s(grow_scalar):
    # the s-indexed means ((u^s+v^s)/2)^(1/s) are nondecreasing in s, which
    # is the sense in which larger s makes the bound harder to satisfy
    r1 = cr.selfadjoint_power_mean(grow_scalar, CriteriaOptions(n_max=1500, s=1.0))
    r2 = cr.selfadjoint_power_mean(grow_scalar, CriteriaOptions(n_max=1500, s=2.0))
    m1 = r1.evidence["b1"] / 2.0
    m2 = math.sqrt(r2.evidence["b1"] / 2.0)
    assert m1 <= m2 + 1e-12


def test_power_mean_implies_a1a2(grow_scalar):
    quarter = scalar_family(lambda n: 1.0, lambda n: 0.25)
    for fam in (grow_scalar, quarter):
        pm = cr.selfadjoint_power_mean(fam, CriteriaOptions(n_max=1500, s=1.0))
        if pm.verdict == SATISFIED:
            assert cr.selfadjoint_a1a2(fam, FAST).verdict == SATISFIED


def test_resolvent_conditions_and_hypothesis(grow_scalar):
    r = cr.discrete_resolvent(grow_scalar, CriteriaOptions(n_max=1500, q=1.0))
    assert r.verdict == SATISFIED
    assert r.evidence["hypothesis_converged"] == 1.0
    assert "Schatten" in r.implied_property
    ones = scalar_family(lambda n: 1.0, lambda n: 1.0)
    assert cr.discrete_resolvent(ones, FAST).verdict == INCONCLUSIVE


def test_weighted_growing_family(grow_scalar):
    r = cr.discrete_weighted(grow_scalar, FAST)
    assert r.verdict == SATISFIED
    # t_n = 1/(n+2) over the trailing window
    assert r.evidence["t_limsup"] < 0.01
    assert "discrete" in r.implied_property


def test_weighted_display_variant_modulus_reduction():
    # alpha = r c I on the single-power-diagonal variant: t -> 1/sqrt(r)
    J = display_alpha_family(max_sa_model(p=1, r=5.0))
    r = cr.discrete_weighted(J, CriteriaOptions(n_max=1200))
    assert r.verdict == SATISFIED
    assert r.evidence["t_limsup"] == pytest.approx(1.0 / math.sqrt(5.0), abs=1e-3)


def test_weighted_kernel_guard(free_scalar):
    r = cr.discrete_weighted(free_scalar, FAST)
    assert r.verdict == INCONCLUSIVE
    assert "guard_near_kernel" in r.evidence


def test_scale_invariance_of_ratio_criteria(grow_scalar):
    scaled = scalar_family(lambda n: 7.25 * (n + 1) ** 2, lambda n: 7.25 * (n + 1))
    for op in (cr.selfadjoint_a1a2, cr.selfadjoint_power_mean, cr.discrete_weighted):
        a = op(grow_scalar, FAST)
        b = op(scaled, FAST)
        assert a.verdict == b.verdict


# --- maximal-index tests -----------------------------------------------------


def test_max_alpha_exact_cancellation():
    r = cr.max_index_alpha(max_sa_model(), CriteriaOptions(n_max=4_000_000))
    assert r.verdict == SATISFIED
    assert r.evidence["partial_sum"] == pytest.approx(math.pi ** 2 / 6.0 - 1.0, abs=1e-6)


def test_max_alpha_l1_iff_cases():
    assert cr.max_index_alpha(model_zero_alpha(Geometric(0.5)),
                              CriteriaOptions(n_max=100_000)).verdict == SATISFIED
    r = cr.max_index_alpha(model_zero_alpha(Power(-1.0)), CriteriaOptions(n_max=100_000))
    assert r.verdict == VIOLATED


def test_max_beta_shortcuts():
    r = cr.max_index_beta(dyukarev_beta_model(), CriteriaOptions(n_max=100_000))
    assert r.verdict == SATISFIED
    m = gen.InteractionModel(p=1, c=1.0, d=Geometric(0.5),
                             beta=gen.ScaledIdentityBlocks(
                                 1, Power(0.0, (math.sqrt(2.0) - 1.0) / 2.0)))
    r = cr.max_index_beta(m, CriteriaOptions(n_max=100_000))
    assert r.verdict == SATISFIED
    assert r.evidence["ratio_limsup"] == pytest.approx(
        0.5 * (1.0 + (math.sqrt(2.0) - 1.0) / 2.0) ** 2, abs=1e-6)
    mz = gen.InteractionModel(p=2, c=1.0, d=Geometric(0.5), beta=gen.ZeroBlocks(2))
    assert cr.max_index_beta(mz, CriteriaOptions(n_max=100_000)).verdict == SATISFIED


# --- perturbation pairs -------------------------------------------------------


def test_perturbation_identical_pair():
    J = gen.make_dyukarev(2, 1)
    r = cr.perturbation_equivalence(J, J, CriteriaOptions(n_max=600))
    assert r.verdict == SATISFIED
    assert r.evidence["a_sup"] < 1e-12
    assert r.evidence["C_B"] < 1e-8
    assert r.evidence["C_A"] < 1e-12


def test_perturbation_dyukarev_witness_three_quarters():
    J = gen.make_dyukarev(1, 1)
    Jhat = gen.make_dirac_beta_simple(dyukarev_beta_model())
    r = cr.perturbation_equivalence(J, Jhat, CriteriaOptions(n_max=4096))
    assert r.verdict == SATISFIED
    assert r.evidence["a_sup"] == pytest.approx(0.75, abs=1e-3)


def test_perturbation_nu_versus_simple_pair():
    # d_{n-1}^2/d_n -> 0 regime: the nu and c*d families stay equivalent
    m = model_zero_alpha(SuperExp(2.0, 1.5))
    r = cr.perturbation_equivalence(gen.make_dirac_alpha_simple(m),
                                    gen.make_dirac_alpha(m),
                                    CriteriaOptions(n_max=256))
    assert r.verdict == SATISFIED
    assert r.evidence["a_sup"] < 0.05


def test_perturbation_alpha_conditions_cases():
    m = max_sa_model()
    r = cr.perturbation_alpha_conditions(m, gen.zero_perturbation(1),
                                         CriteriaOptions(n_max=2000))
    assert r.verdict == SATISFIED
    assert r.evidence["a_sup"] == 0.0
    assert "n_pm = p" in r.implied_property

    half = gen.ScaledIdentityBlocks(1, Power(0.0, 0.5))
    r = cr.perturbation_alpha_conditions(
        m, gen.PerturbationData(Aprime=gen.ZeroBlocks(1), Bprime=half),
        CriteriaOptions(n_max=2000))
    assert r.verdict == SATISFIED
    assert r.evidence["a_sup"] == pytest.approx(0.5)
    assert r.evidence["C_B_even"] == 0.0

    # Bprime step of height d_{j+1} on even entries: the even defect witness is 1
    m2 = model_const_alpha(Geometric(0.5), 1.0)
    vals = []
    for k in range(4002):  # Bprime_n = vals[n]
        j, rpar = divmod(k, 2)
        vals.append(m2.d_value(j + 1) if rpar == 0 else 0.0)
    stair = gen.ScaledIdentityBlocks(1, Explicit.from_values(vals))
    r = cr.perturbation_alpha_conditions(
        m2, gen.PerturbationData(Aprime=gen.ZeroBlocks(1), Bprime=stair),
        CriteriaOptions(n_max=2000))
    assert r.verdict == SATISFIED
    assert r.evidence["C_B_even"] == pytest.approx(1.0, abs=1e-12)


# --- diagonal-strength and product tests ---------------------------------------


def test_dennis_wall_divergent_weighted_series():
    N = 20000
    ns = np.arange(1, N + 2)
    aseq = Explicit(log_values=(ns + 0.5) * math.log(2.0) - np.log(ns))
    m = gen.InteractionModel(p=1, c=1.0, d=Geometric(0.5),
                             alpha=gen.ScaledIdentityBlocks(1, aseq))
    r = cr.dennis_wall(m, CriteriaOptions(n_max=N))
    assert r.verdict == SATISFIED
    assert "selfadjoint" in r.implied_property
    assert "discrete" in r.implied_property


def test_dennis_wall_zero_strength_violated():
    r = cr.dennis_wall(model_zero_alpha(Geometric(0.5)), FAST)
    assert r.verdict == VIOLATED


def test_dennis_wall_needs_diagonal():
    m = gen.InteractionModel(
        p=2, c=1.0, d=Geometric(0.5),
        alpha=gen.ConstantBlocks(np.array([[1.0, 0.5], [0.5, 1.0]])))
    r = cr.dennis_wall(m, FAST)
    assert r.verdict == INCONCLUSIVE
    assert "guard_not_diagonal" in r.evidence


def test_dennis_wall_block_split_combined():
    N = 20000
    ns = np.arange(1, N + 2)
    # lower diagonal strengths scaled so the weighted terms are 1/n
    lower_logs = (ns - 0.5) * math.log(36.0) + np.log(ns + 1.0)
    lower = gen.DiagonalBlocks([Explicit(log_values=lower_logs)])
    split = gen.SplitBlocks(gen.ScaledIdentityBlocks(1, Power(0.0, 5.0)), lower)
    m = gen.InteractionModel(p=2, c=1.0, d=d36(), alpha=split)
    r = cr.dennis_wall(m, CriteriaOptions(n_max=10_000))
    assert r.verdict == SATISFIED
    assert "n_pm = 1" in r.implied_property


def test_kosmir_sequence_base_and_closed_forms():
    m = model_zero_alpha(Geometric(0.5))
    J = gen.make_dirac_alpha(m)
    assert np.allclose(cr.kosmir_sequence(J, 1), np.eye(1))
    d1, d2 = 0.5, 0.25
    nu = gen.nu
    c3 = -(nu(d1, 1.0) * d2 ** 1.5) / (nu(d2, 1.0) * d1 ** 1.5)
    assert cr.kosmir_sequence(J, 3)[0, 0].real == pytest.approx(c3, rel=1e-12)
    assert c3 == pytest.approx(-0.65192, abs=1e-5)
    for j in range(1, 26):
        dj1 = 2.0 ** -(j + 1)
        even = (-1.0) ** j * math.sqrt(dj1) * d1 ** 1.5 / nu(d1, 1.0)
        assert cr.kosmir_sequence(J, 2 * j)[0, 0].real == pytest.approx(even, rel=1e-12)
        odd = (-1.0) ** j * nu(d1, 1.0) * dj1 ** 1.5 / (nu(dj1, 1.0) * d1 ** 1.5)
        assert cr.kosmir_sequence(J, 2 * j + 1)[0, 0].real == pytest.approx(odd, rel=1e-12)
    assert np.allclose(cr.kosmir_sequence(J, 0), np.linalg.inv(J.offdiag_block(1)))


def test_kosmir_verdicts():
    mb = gen.InteractionModel(p=1, c=1.0, d=Geometric(0.5),
                              beta=gen.ScaledIdentityBlocks(1, Geometric(0.5)))
    assert cr.kosmir_test(gen.make_dirac_beta(mb), CriteriaOptions(n_max=3000)).verdict == SATISFIED
    mb2 = gen.InteractionModel(p=1, c=1.0, d=SuperExp(2.0, 2.0),
                               beta=gen.ScaledIdentityBlocks(1, Power(0.0, 1.0)))
    assert cr.kosmir_test(gen.make_dirac_beta(mb2), FAST).verdict == VIOLATED
    # display variant of the alpha family: odd sandwich terms stay order one
    J = display_alpha_family(model_const_alpha(Geometric(0.5), 1.0))
    assert cr.kosmir_test(J, FAST).verdict == VIOLATED


def test_berezansky_cases(grow_scalar):
    geom = scalar_family(lambda n: 0.0, lambda n: 2.0 ** min(n, 1000))
    assert cr.berezansky_test(geom, CriteriaOptions(n_max=900)).verdict == SATISFIED
    m = model_const_alpha(Geometric(0.5), 1.0)
    r = cr.berezansky_test(gen.make_dirac_alpha(m), CriteriaOptions(n_max=600))
    assert r.verdict == VIOLATED
    assert "diagonal" in r.implied_property
    r = cr.berezansky_test(gen.make_dirac_beta(dyukarev_beta_model()),
                           CriteriaOptions(n_max=600))
    assert r.verdict == VIOLATED
    assert r.evidence["first_convexity_violation"] >= 0


# --- second-order and first-order suites ----------------------------------------


def test_schrodinger_suite_discrete_example():
    m = gen.InteractionModel(p=1, c=1.0, d=Power(-2.0),
                             alpha=gen.ScaledIdentityBlocks(1, Power(4.0)))
    reps = {r.citations[0]: r for r in cr.schrodinger_criteria(m, CriteriaOptions(n_max=2000))}
    assert reps["modulus-pair-weight"].verdict == SATISFIED
    assert reps["modulus-pair-weight"].evidence["limsup"] < 0.01
    assert reps["min-gap-weight"].verdict == SATISFIED
    assert reps["interval-square-series"].verdict == INCONCLUSIVE


def test_schrodinger_suite_square_series():
    m = gen.InteractionModel(p=1, c=1.0, d=Power(-0.5), alpha=gen.ZeroBlocks(1))
    reps = {r.citations[0]: r for r in cr.schrodinger_criteria(m, CriteriaOptions(n_max=4000))}
    r = reps["interval-square-series"]
    assert r.verdict == SATISFIED
    assert "selfadjoint" in r.implied_property


def test_schrodinger_suite_kernel_guard():
    vals = [-(2.0 * n + 1.0) for n in range(1, 5000)]
    m = gen.InteractionModel(p=1, c=1.0, d=Power(-1.0),
                             alpha=gen.ScaledIdentityBlocks(1, Explicit.from_values(vals)))
    reps = cr.schrodinger_criteria(m, CriteriaOptions(n_max=2000))
    for r in reps:
        assert r.verdict == INCONCLUSIVE


def test_dirac_suite_threshold_cases():
    for r_val, verdict in ((5.0, SATISFIED), (4.0, INCONCLUSIVE)):
        m = max_sa_model(r=r_val)
        rep = cr.dirac_criteria(m, CriteriaOptions(n_max=1200))[0]
        assert rep.verdict == verdict
        assert rep.evidence["limsup"] == pytest.approx(1.0 / math.sqrt(r_val), abs=1e-9)
    rep = cr.dirac_criteria(model_zero_alpha(Geometric(0.5)), FAST)[0]
    assert rep.verdict == INCONCLUSIVE
    assert "guard_near_kernel" in rep.evidence


def test_dirac_suite_branches():
    # summable intervals: finite-interval reading
    rep = cr.dirac_criteria(max_sa_model(r=5.0), CriteriaOptions(n_max=1200))[0]
    assert "every selfadjoint extension" in rep.implied_property
    # divergent intervals: half-line reading
    m = gen.InteractionModel(p=1, c=1.0, d=Power(-1.0),
                             alpha=gen.ScaledIdentityBlocks(1, Power(0.0, 25.0)))
    rep = cr.dirac_criteria(m, CriteriaOptions(n_max=30_000))[0]
    assert rep.verdict == SATISFIED
    assert rep.implied_property == "selfadjoint with discrete spectrum"


# --- report hygiene --------------------------------------------------------------


def test_reports_carry_finite_evidence_and_citations(grow_scalar):
    reports = [
        cr.carleman(grow_scalar, FAST),
        cr.selfadjoint_a1a2(grow_scalar, FAST),
        cr.discrete_weighted(grow_scalar, FAST),
        cr.max_index_alpha(max_sa_model(), CriteriaOptions(n_max=50_000)),
    ]
    for r in reports:
        assert r.citations
        assert r.evidence
        for v in r.evidence.values():
            assert math.isfinite(v)
        d = r.to_dict()
        assert set(d) == {"criterion_id", "verdict", "implied_property", "evidence", "citations"}
