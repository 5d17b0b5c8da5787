import math

import numpy as np
import pytest

from mupower import beta, beta_prime, composite_u, ee, se, utility, utility_grad, utility_hess
from mupower.utility import UserParams, _beta_prime_scalar, _beta_scalar, _grad_scalar, _hess_scalar

# High-precision evaluations of the defining formulas (mpmath, 30 digits).
LN101 = 4.615120516841259
SE_AT_001 = 0.6931471805599453            # ln 2
EE_AT_1 = 4.195564106219327               # ln(101)/1.1
EE_AT_01 = 11.989476363991853             # ln(11)/0.2
U_HALF = 1.4816828918701371               # ln(ln 101) - 0.5 ln 1.1
U_ONE = 1.5293379817722995                # ln(ln 101)
COMPOSITE_HALF = 4.400344757667923        # sqrt(SE * EE)
BETA_AT_1 = 0.23598710086048005
BETA_AT_001 = 7.934822724889299
GRAD_AT_1 = -0.24001172649047268


def test_se_examples():
    assert se(0.0, 100.0) == 0.0
    assert se(1.0, 100.0) == pytest.approx(LN101, rel=1e-14)
    assert se(0.01, 100.0) == pytest.approx(SE_AT_001, rel=1e-14)


def test_ee_examples():
    assert ee(0.0, 0.1, 100.0) == 0.0
    assert ee(1.0, 0.1, 100.0) == pytest.approx(EE_AT_1, rel=1e-14)
    assert ee(0.1, 0.1, 100.0) == pytest.approx(EE_AT_01, rel=1e-14)


def test_utility_examples():
    # ln(1 + delta p) = 1 kills the outer log regardless of w
    p = (math.e - 1.0) / 100.0
    for w in (0.0, 0.3, 1.0):
        assert utility(p, w, 0.1, 100.0) == pytest.approx(-(1 - w) * math.log(p + 0.1), rel=1e-12)
    assert utility(1.0, 0.5, 0.1, 100.0) == pytest.approx(U_HALF, rel=1e-14)
    assert utility(1.0, 1.0, 0.1, 100.0) == pytest.approx(U_ONE, rel=1e-14)


def test_composite_examples():
    assert composite_u(1.0, 1.0, 0.1, 100.0) == pytest.approx(LN101, rel=1e-12)
    assert composite_u(1.0, 0.0, 0.1, 100.0) == pytest.approx(EE_AT_1, rel=1e-12)
    assert composite_u(1.0, 0.5, 0.1, 100.0) == pytest.approx(COMPOSITE_HALF, rel=1e-12)


def test_beta_examples():
    assert beta(1.0, 0.1, 100.0) == pytest.approx(BETA_AT_1, rel=1e-14)
    assert beta(0.01, 0.1, 100.0) == pytest.approx(BETA_AT_001, rel=1e-14)
    assert beta(0.01, 0.1, 100.0) > beta(1.0, 0.1, 100.0)


def test_grad_examples():
    assert utility_grad(1.0, 0.5, 0.1, 100.0) == pytest.approx(GRAD_AT_1, rel=1e-12)


def test_log_composite_identity():
    # utility == w ln(se) + (1 - w) ln(ee) wherever se > 0
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = float(rng.uniform(1e-4, 1.0))
        w = float(rng.uniform(0.0, 1.0))
        pc = float(rng.uniform(0.02, 0.5))
        d = float(10.0 ** rng.uniform(-2.0, 2.0))
        lhs = utility(p, w, pc, d)
        rhs = w * np.log(se(p, d)) + (1 - w) * np.log(ee(p, pc, d))
        assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(lhs)))


def test_beta_strictly_decreasing():
    rng = np.random.default_rng(17)
    for _ in range(100):
        pc = float(rng.uniform(0.02, 0.5))
        d = float(10.0 ** rng.uniform(-2.0, 2.0))
        p_max = float(rng.uniform(0.2, 2.0))
        p = np.sort(rng.uniform(1e-6, p_max, 50))
        values = beta(p, pc, d)
        assert np.all(np.diff(values) < 0)
        assert np.all(beta_prime(p, pc, d) < 0)


def _fd_tolerance_check(analytic, fd, floor):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), floor)
    return np.max(np.abs(analytic - fd) / denom)


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(23)
    grid = np.logspace(-4, 0, 40)
    for _ in range(50):
        w = float(rng.uniform(0.0, 1.0))
        pc = float(rng.uniform(0.02, 0.5))
        d = float(10.0 ** rng.uniform(-2.0, 2.0))
        h = 1e-6 * grid  # relative step keeps truncation ~1e-13 at small p
        fd_grad = (utility(grid + h, w, pc, d) - utility(grid - h, w, pc, d)) / (2 * h)
        fd_hess = (utility_grad(grid + h, w, pc, d) - utility_grad(grid - h, w, pc, d)) / (2 * h)
        fd_betap = (beta(grid + h, pc, d) - beta(grid - h, pc, d)) / (2 * h)
        a_grad = utility_grad(grid, w, pc, d)
        a_hess = utility_hess(grid, w, pc, d)
        a_betap = beta_prime(grid, pc, d)
        # points with a near-zero derivative carry no relative information
        assert _fd_tolerance_check(a_grad, fd_grad, 1e-3 * np.max(np.abs(a_grad))) < 1e-6
        assert _fd_tolerance_check(a_hess, fd_hess, 1e-3 * np.max(np.abs(a_hess))) < 1e-6
        assert _fd_tolerance_check(a_betap, fd_betap, 1e-3 * np.max(np.abs(a_betap))) < 1e-6


def test_stationary_point_sign_structure():
    # increasing strictly below the beta = 1 - w crossing, non-increasing above
    rng = np.random.default_rng(29)
    for _ in range(50):
        pc = float(rng.uniform(0.05, 0.3))
        d = float(10.0 ** rng.uniform(-1.0, 2.0))
        p_max = float(rng.uniform(0.5, 2.0))
        b_end = float(beta(p_max, pc, d))
        w = float(rng.uniform(0.0, max(0.0, 1.0 - b_end)))
        if w > 1.0 - b_end:
            assert np.all(utility_grad(np.linspace(1e-6, p_max, 200), w, pc, d) > 0)
            continue
        from oracles import bisect_root

        p0 = bisect_root(lambda p: float(beta(p, pc, d)) - (1 - w), 1e-9, p_max)
        below = np.linspace(1e-6, p0 * (1 - 1e-6), 100)
        above = np.linspace(min(p0 * (1 + 1e-6), p_max), p_max, 100)
        assert np.all(utility_grad(below, w, pc, d) > 0)
        assert np.all(utility_grad(above, w, pc, d) <= 1e-12)


def test_grad_vanishes_at_stationary_point():
    from oracles import bisect_root

    p0 = bisect_root(lambda p: float(beta(p, 0.1, 100.0)) - 0.6, 1e-9, 1.0)
    assert abs(utility_grad(p0, 0.4, 0.1, 100.0)) < 1e-12


def test_argmax_invariant_under_constant_shift():
    grid = np.linspace(1e-4, 1.0, 20001)
    values = utility(grid, 0.35, 0.1, 50.0)
    for c in (-3.0, 0.1, 42.0):
        assert np.argmax(values) == np.argmax(values + c)


def test_domain_errors():
    with pytest.raises(ValueError):
        se(-1e-9, 100.0)
    with pytest.raises(ValueError):
        ee(-0.1, 0.1, 100.0)
    for fn in (
        lambda p: utility(p, 0.5, 0.1, 100.0),
        lambda p: composite_u(p, 0.5, 0.1, 100.0),
        lambda p: beta(p, 0.1, 100.0),
        lambda p: beta_prime(p, 0.1, 100.0),
        lambda p: utility_grad(p, 0.5, 0.1, 100.0),
        lambda p: utility_hess(p, 0.5, 0.1, 100.0),
    ):
        with pytest.raises(ValueError):
            fn(0.0)
        with pytest.raises(ValueError):
            fn(-0.5)


def test_user_params_validation():
    UserParams(0.0, 0.1, 1.0)
    UserParams(1.0, 0.1, 1.0)
    with pytest.raises(ValueError, match="w"):
        UserParams(1.2, 0.1, 1.0)
    with pytest.raises(ValueError, match="p_circuit"):
        UserParams(0.5, 0.0, 1.0)
    with pytest.raises(ValueError, match="p_max"):
        UserParams(0.5, 0.1, -1.0)


def test_scalar_twins_agree_with_vectorized():
    rng = np.random.default_rng(31)
    for _ in range(100):
        p = float(rng.uniform(1e-6, 2.0))
        w = float(rng.uniform(0.0, 1.0))
        pc = float(rng.uniform(0.02, 0.5))
        d = float(10.0 ** rng.uniform(-2.0, 2.0))
        # libm log1p and numpy log1p may differ in the last ulp
        assert _beta_scalar(p, pc, d) == pytest.approx(float(beta(p, pc, d)), rel=1e-14)
        assert _beta_prime_scalar(p, pc, d) == pytest.approx(float(beta_prime(p, pc, d)), rel=1e-14)
        assert _grad_scalar(p, w, pc, d) == pytest.approx(float(utility_grad(p, w, pc, d)), rel=1e-13, abs=1e-15)
        assert _hess_scalar(p, w, pc, d) == pytest.approx(float(utility_hess(p, w, pc, d)), rel=1e-13, abs=1e-15)


def test_accurate_log_for_tiny_powers():
    # ln(1 + delta p) must not lose precision when delta p is below 1e-12
    p = 1e-15
    d = 1.0
    assert se(p, d) == pytest.approx(p, rel=1e-12)
    # beta ~ pc / p in that regime
    assert beta(p, 0.1, d) == pytest.approx(0.1 / p, rel=1e-9)
