import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from bubble.errors import DomainError
from bubble.spaces import (
    HARDY_LOG_CONSTANT,
    IDENTITY_MAP,
    RECIPROCAL_MAP,
    SQUARE_MAP,
    CompositionMap,
    fit_norm_equivalence,
    hardy_log_ratio,
    hardy_power_constant,
    hardy_power_ratio,
    norm_calligraphic_integral,
    norm_calligraphic_spectral,
    norm_uniform,
    random_spectral,
    verify_algebra,
    verify_composition_bound,
    verify_embedding_chain,
    verify_hardy_log,
    verify_hardy_power,
    verify_norm_equivalence,
)
from bubble.spectral import SpectralFunction, gauss_legendre, synthesize

RULE = gauss_legendre(48)


def log_weight_integral_oracle(func):
    """Adaptive oracle for integral_0^1 F(x) / (x log^2(2/x)) dx.

    Uses x = e^(1 - 1/v) so the slowly decaying tail becomes a proper
    integral on (0, 1]; scipy's adaptive rule then resolves it.
    """

    def integrand(v):
        t = 1.0 / v - 1.0
        x = math.exp(-t)
        return func(x) / ((math.log(2.0) + t) * v) ** 2

    val, err = quad(integrand, 0.0, 1.0, limit=400)
    assert err < 1e-7
    return val


def interval_log_weight_oracle(func):
    """Oracle for the delta = -1 weight on (-1, 1), split at 0."""

    def one_side(sign):
        def integrand(v):
            t = 1.0 / v - 1.0
            x = math.exp(-t)
            L = math.log(2.0) + t - math.log(2.0 - x)
            return func(sign * (1.0 - x)) / ((2.0 - x) * (L * v) ** 2)

        val, err = quad(integrand, 0.0, 1.0, limit=400)
        assert err < 1e-7
        return val

    return one_side(1.0) + one_side(-1.0)


def test_norm_uniform_unweighted_basis():
    assert norm_uniform(SpectralFunction.basis(0), 0, 0, RULE) == pytest.approx(1.0, abs=1e-14)


def test_norm_uniform_weighted_p1():
    # j=0 term: int (1-z^2)(3/2)z^2 = 2/5; j=1 term: int (1-z^2)(3/2) = 2.
    got = norm_uniform(SpectralFunction.basis(1), 1, 1, RULE)
    assert got == pytest.approx(math.sqrt(12.0 / 5.0), abs=1e-14)
    oracle = quad(lambda z: (1 - z**2) * 1.5 * z**2, -1, 1)[0] + quad(
        lambda z: (1 - z**2) * 1.5, -1, 1
    )[0]
    assert got == pytest.approx(math.sqrt(oracle), rel=1e-12)


def test_norm_uniform_log_weight_matches_adaptive_oracle():
    u = SpectralFunction.basis(0)
    got = norm_uniform(u, 0, -1, RULE)
    oracle = math.sqrt(interval_log_weight_oracle(lambda z: 0.5 * np.ones_like(z)))
    assert got == pytest.approx(oracle, abs=1e-6)
    v = SpectralFunction(np.array([0.3, -0.2, 0.1]))
    got_v = norm_uniform(v, 0, -1, RULE)
    oracle_v = math.sqrt(interval_log_weight_oracle(lambda z: synthesize(v, z) ** 2))
    assert got_v == pytest.approx(oracle_v, abs=1e-6)


def test_norm_uniform_fractional_weight():
    u = SpectralFunction(np.array([0.5, 0.4, -0.3]))
    got = norm_uniform(u, 0, 0.5, RULE)
    oracle = quad(lambda z: (1 - z**2) ** 0.5 * synthesize(u, z) ** 2, -1, 1)[0]
    assert got == pytest.approx(math.sqrt(oracle), rel=1e-9)


def test_norm_uniform_fractional_negative_weight():
    # integrable endpoint singularity (1 - z^2)^(-1/2)
    u = SpectralFunction(np.array([0.5, 0.4, -0.3]))
    got = norm_uniform(u, 0, -0.5, RULE)
    # scipy's algebraic-weight rule carries the (1-z)^a (1+z)^b factor itself
    oracle = quad(
        lambda z: synthesize(u, z) ** 2,
        -1,
        1,
        weight="alg",
        wvar=(-0.5, -0.5),
    )[0]
    assert got == pytest.approx(math.sqrt(oracle), rel=1e-8)


def test_norm_uniform_rejects_delta_below_minus_one():
    with pytest.raises(DomainError):
        norm_uniform(SpectralFunction.basis(0), 0, -1.5, RULE)


def test_norm_calligraphic_integral_basis():
    for k in range(4):
        assert norm_calligraphic_integral(SpectralFunction.basis(0), k, RULE) == pytest.approx(
            1.0, abs=1e-14
        )
    assert norm_calligraphic_integral(SpectralFunction.basis(1), 2, RULE) == pytest.approx(
        math.sqrt(3.0), abs=1e-14
    )


def test_norm_calligraphic_integral_term_oracle():
    rng = np.random.default_rng(31)
    u = random_spectral(10, rng)
    scale = np.sqrt((2 * np.arange(11) + 1) / 2.0)
    series = np.polynomial.legendre.Legendre(u.coeffs * scale)
    x, w = np.polynomial.legendre.leggauss(40)
    total = 0.0
    d = series
    for j in range(4):
        total += float(w @ ((1 - x**2) ** j * d(x) ** 2))
        d = d.deriv()
    assert norm_calligraphic_integral(u, 3, RULE) == pytest.approx(math.sqrt(total), abs=1e-12)


def test_norm_calligraphic_spectral_values():
    for n, k in [(0, 1), (1, 3), (2, 2), (5, 4)]:
        got = norm_calligraphic_spectral(SpectralFunction.basis(n), k, 1.0)
        assert got == pytest.approx((n * (n + 1) + 1) ** (k / 2.0), rel=1e-14)
    assert norm_calligraphic_spectral(SpectralFunction.basis(2), 2, 1.0) == pytest.approx(7.0)
    assert norm_calligraphic_spectral(SpectralFunction.zero(8), 3) == 0.0
    with pytest.raises(DomainError):
        norm_calligraphic_spectral(SpectralFunction.zero(3), 2, 0.0)


def test_norm_monotone_in_k():
    rng = np.random.default_rng(5)
    for _ in range(20):
        u = random_spectral(12, rng)
        norms = [norm_calligraphic_integral(u, k, RULE) for k in range(5)]
        assert np.all(np.diff(norms) >= -1e-14)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-1e3, 1e3, allow_nan=False))
def test_norms_absolutely_homogeneous(c):
    u = SpectralFunction(np.array([0.4, -0.3, 0.2, 0.1]))
    for fn in (
        lambda v: norm_uniform(v, 1, 1, RULE),
        lambda v: norm_calligraphic_integral(v, 2, RULE),
        lambda v: norm_calligraphic_spectral(v, 2, 1.0),
    ):
        assert fn(c * u) == pytest.approx(abs(c) * fn(u), rel=1e-12, abs=1e-12)


def test_equivalence_interval_holds_on_fresh_samples():
    lo, hi = fit_norm_equivalence(2, sample_count=200, seed=2024)
    rng = np.random.default_rng(77)
    for _ in range(100):
        u = random_spectral(16, rng)
        ratio = norm_calligraphic_integral(u, 2, RULE) / norm_calligraphic_spectral(u, 2, 1.0)
        assert lo / 1.05 <= ratio <= hi * 1.05


def test_hardy_log_constant_value():
    assert HARDY_LOG_CONSTANT == pytest.approx(23.0831, abs=2e-4)


def test_hardy_log_constant_function():
    # f = 1: LHS = 1/log 2 by the antiderivative -1/log(2/x); RHS = 1/2.
    ratio = hardy_log_ratio(lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    assert ratio == pytest.approx(2.0 / math.log(2.0), abs=1e-6)


def test_hardy_log_linear_function_oracle():
    ratio = hardy_log_ratio(lambda x: x, lambda x: np.ones_like(x))
    lhs = log_weight_integral_oracle(lambda x: x**2)
    rhs = quad(lambda x: x * (x**2 + 1.0), 0, 1)[0]
    assert ratio == pytest.approx(lhs / rhs, rel=1e-8)
    assert ratio <= HARDY_LOG_CONSTANT


def test_hardy_log_suite_passes():
    report = verify_hardy_log(seed=99, count=50)
    assert report.passed
    assert report.samples >= 50
    assert report.worst_ratio <= HARDY_LOG_CONSTANT


def test_hardy_log_skips_zero_function():
    report = verify_hardy_log(family=[Polynomial([0.0]), Polynomial([1.0])])
    assert report.skipped == 1
    assert report.samples == 1


def test_hardy_power_alpha_one_constant_function():
    ratio = hardy_power_ratio(lambda x: np.ones_like(x), lambda x: np.zeros_like(x), 1.0)
    assert ratio == pytest.approx(3.0, abs=1e-9)
    assert hardy_power_constant(1.0) == 32.0


def test_hardy_power_alpha_two_linear():
    # LHS = int x^3 = 1/4, RHS = int x^3 (x^2 + 1) = 5/12, ratio 3/5.
    ratio = hardy_power_ratio(lambda x: x, lambda x: np.ones_like(x), 2.0)
    assert ratio == pytest.approx(0.6, abs=1e-10)


def test_hardy_power_suite_passes():
    for alpha in (0.5, 1.0, 2.0):
        report = verify_hardy_power(alpha, seed=7, count=50)
        assert report.passed
        assert report.worst_ratio <= hardy_power_constant(alpha)
        assert "unbalanced brace" in report.notes


def test_hardy_power_rejects_bad_alpha():
    with pytest.raises(DomainError):
        verify_hardy_power(0.0)


def test_algebra_constant_pair():
    # p_0^2 = (1/sqrt(2)) p_0, so the ratio is 1/sqrt(2) in any k-norm.
    p0 = SpectralFunction.basis(0)
    num = norm_calligraphic_integral(
        SpectralFunction(np.array([0.5 * math.sqrt(2.0)])), 2, RULE
    )
    den = norm_calligraphic_integral(p0, 2, RULE) ** 2
    assert num / den == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-13)


def test_algebra_suite_stable_under_refinement():
    report = verify_algebra(2, sample_count=100, seed=11)
    fine = verify_algebra(2, sample_count=100, rule=gauss_legendre(64), seed=11)
    assert report.passed and fine.passed
    assert report.worst_ratio == pytest.approx(fine.worst_ratio, rel=0.10)
    assert report.worst_ratio > 0


def test_algebra_zero_factor_gives_zero_ratio():
    zero = SpectralFunction.zero(4)
    v = SpectralFunction(np.array([0.3, 0.1, -0.2]))
    report = verify_algebra(2, pairs=[(zero, v)])
    assert report.worst_ratio == 0.0
    assert report.passed


def test_algebra_rejects_small_k():
    with pytest.raises(DomainError):
        verify_algebra(1)


def test_embedding_chain_report():
    report = verify_embedding_chain(3, sample_count=200, seed=13)
    assert report.passed
    assert np.isfinite(report.worst_ratio)
    doubled = verify_embedding_chain(3, sample_count=400, seed=13)
    assert doubled.worst_ratio == pytest.approx(report.worst_ratio, rel=0.15)


def test_embedding_single_functions():
    # ||p_1||_L2 = 1 <= ||p_1||_{calligraphic 2}, and the j = 2, k = 3 weight
    # exponent is max(-1, 1) = 1.
    p1 = SpectralFunction.basis(1)
    assert norm_calligraphic_integral(p1, 2, RULE) >= 1.0
    p5 = SpectralFunction.basis(5)
    from bubble.spaces import _derivative_chain

    d2 = _derivative_chain(p5, 2)[2]
    lhs = norm_uniform(d2, 0, max(-1, 2 * 2 - 3), RULE)
    assert np.isfinite(lhs)
    assert lhs <= 100.0 * norm_calligraphic_integral(p5, 3, RULE)


def test_composition_identity_below_one():
    report = verify_composition_bound(IDENTITY_MAP, 2, sample_count=30, seed=19)
    assert report.passed
    assert report.worst_ratio < 1.0


def test_composition_square_and_reciprocal():
    for fmap in (SQUARE_MAP, RECIPROCAL_MAP):
        report = verify_composition_bound(fmap, 2, sample_count=30, seed=23)
        assert report.skipped == 0
        assert np.isfinite(report.worst_ratio)
        refine = verify_composition_bound(fmap, 2, sample_count=60, seed=23)
        assert refine.worst_ratio == pytest.approx(report.worst_ratio, rel=0.15)


def test_composition_counts_range_violations():
    inside = SpectralFunction(np.array([1.5 * math.sqrt(2.0), 0.1]))
    outside = SpectralFunction(np.array([10.0 * math.sqrt(2.0)]))  # beyond (0.5, 3)
    report = verify_composition_bound(
        RECIPROCAL_MAP, 2, samples=[inside, outside], seed=3
    )
    assert report.skipped == 1
    assert report.samples == 1


def test_norm_equivalence_report():
    report = verify_norm_equivalence(ks=(2, 3), sample_count=100, seed=41)
    assert report.passed
    assert report.worst_ratio <= 1.15


def test_weighted_norm_spec_dispatch():
    from bubble.spaces import WeightedNormSpec

    u = SpectralFunction(np.array([0.4, -0.3, 0.2]))
    uniform = WeightedNormSpec(k=1, family="uniform", delta=1.0)
    assert uniform.norm(u, RULE) == pytest.approx(norm_uniform(u, 1, 1.0, RULE), rel=1e-15)
    cal = WeightedNormSpec(k=2)
    assert cal.norm(u, RULE) == pytest.approx(norm_calligraphic_integral(u, 2, RULE), rel=1e-15)
    assert cal.norm(u, RULE, spectral=True) == pytest.approx(
        norm_calligraphic_spectral(u, 2, 1.0), rel=1e-15
    )
    with pytest.raises(DomainError):
        WeightedNormSpec(k=1, family="uniform", delta=-2.0)
    with pytest.raises(DomainError):
        WeightedNormSpec(k=1, lam=0.0)
    with pytest.raises(DomainError):
        WeightedNormSpec(k=1, family="sobolev")


def test_report_json_shape():
    report = verify_hardy_log(seed=1, count=5)
    d = report.to_json_dict()
    assert set(d) >= {"name", "samples", "worst_ratio", "stated_constant", "pass", "seed"}
    assert d["pass"] is True
