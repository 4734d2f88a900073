import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_execution.errors import EtaTildeViolation, PrecisionViolation
from entropy_execution.model_config import (
    GaussianDist,
    LinearSchedule,
    ModelParams,
    PriorSchedule,
    RiskSpecModel1,
    RiskSpecModel2,
    derive_model1_coeffs,
    derive_model2_coeffs,
)

# 40-digit mpmath evaluations of the coefficient definitions
A1 = -7.868131868131868131868e-06
C1 = 0.01098901098901098901099
G = 1.24875e-4
A1_HAT = 1.254442654578667309107
ALPHA1 = 0.02511924894553434499225
ETA_TILDE = 1.673626373626373626374e-05
A2 = 6.868131868131868131868e-06
C_SHIFT = 1.373626373626373626374e-05
A2_HAT = 0.4529758610159760006539
ALPHA2 = 0.05760837828033687439371


def test_model_params_validation(params):
    with pytest.raises(ValueError):
        params.replace(eta=0.0)
    with pytest.raises(ValueError):
        params.replace(beta=-1.0)
    with pytest.raises(ValueError):
        params.replace(rho=1.5)
    with pytest.raises(ValueError):
        params.replace(horizon=0.0)
    assert params.g == pytest.approx(G, rel=1e-15)


def test_gaussian_requires_positive_precision():
    with pytest.raises(PrecisionViolation):
        GaussianDist(0.0, 0.0)
    d = GaussianDist(1.0, 4.0)
    assert d.variance == 0.25 and d.std == 0.5


def test_model1_benchmark_coefficients(params, prior, risk1):
    c = derive_model1_coeffs(params, prior, risk1)
    assert c.a1 == pytest.approx(A1, rel=1e-13)
    assert c.b1 == 0.0
    assert c.c == pytest.approx(C1, rel=1e-13)
    assert c.g == pytest.approx(G, rel=1e-15)
    assert c.a1_hat == pytest.approx(A1_HAT, rel=1e-13)
    assert c.alpha1 == pytest.approx(ALPHA1, rel=1e-12)
    assert c.closed_form


def test_model1_cancelling_coupling(params, prior):
    c = derive_model1_coeffs(params, GaussianDist(3.0, 2e-8), RiskSpecModel1(0.0, -params.gamma_M, 4e-7))
    assert c.a1 == 0.0 and c.b1 == 0.0
    assert c.a1_hat is None and not c.closed_form


def test_model1_closed_form_flag_when_g_too_small(params, prior, risk1):
    c = derive_model1_coeffs(params.replace(delta=1.26e-7), prior, risk1)
    assert c.a1_hat is not None and c.alpha1 is None


def test_model1_precision_violation(params, prior):
    with pytest.raises(PrecisionViolation):
        derive_model1_coeffs(params, prior, RiskSpecModel1(0.0, 0.0, -2e-8))


def test_model2_benchmark_coefficients(params, prior, risk2):
    c = derive_model2_coeffs(params, prior, risk2)
    assert c.eta_tilde == pytest.approx(ETA_TILDE, rel=1e-13)
    assert c.a2 == pytest.approx(A2, rel=1e-13)
    assert c.a2_hat == pytest.approx(A2_HAT, rel=1e-13)
    assert c.c_shift == pytest.approx(C_SHIFT, rel=1e-13)
    assert c.d_shift == 0.0 and c.b2 == 0.0
    assert c.alpha2 == pytest.approx(ALPHA2, rel=1e-12)


def test_model2_zero_market_impact(params, risk2):
    c = derive_model2_coeffs(params.replace(gamma_M=0.0), GaussianDist(2.0, 1e-8), risk2)
    assert c.a2 == 0.0 and c.b2 == 0.0 and c.c_shift == 0.0
    assert c.alpha2 is None


def test_model2_eta_tilde_violation(params, prior):
    with pytest.raises(EtaTildeViolation):
        derive_model2_coeffs(params, prior, RiskSpecModel2(1e-4, 0.0, 9e-7))


def test_schedules_and_validation(params):
    sched = PriorSchedule(LinearSchedule(1.0, 2.0), LinearSchedule(1e-8, -2e-8))
    assert not sched.is_constant
    assert sched.mean(0.5) == 2.0
    with pytest.raises(PrecisionViolation):
        sched.validate(np.linspace(0, 1, 11))
    risk = RiskSpecModel2(0.0, 0.0, LinearSchedule(0.0, -1e-8))
    with pytest.raises(PrecisionViolation):
        risk.validate(PriorSchedule(5e-9, 5e-9), params, [0.0, 1.0])


@settings(max_examples=200, deadline=None)
@given(s=st.floats(1e-10, 1e3), r_aa=st.floats(0.0, 1e3), beta=st.floats(1e-3, 1e3),
       m=st.floats(-1e4, 1e4),
       gm=st.one_of(st.just(0.0), st.floats(1e-12, 1e-3), st.floats(-1e-3, -1e-12)))
def test_c_in_unit_interval_and_a2_nonnegative(s, r_aa, beta, m, gm):
    p = ModelParams(0.0, gm, 1.0, 1.0, beta, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    c1 = derive_model1_coeffs(p, GaussianDist(m, s), RiskSpecModel1(0.0, 0.0, r_aa))
    assert 0 < c1.c <= 1
    c2 = derive_model2_coeffs(p, GaussianDist(m, s), RiskSpecModel2(0.0, 0.0, r_aa))
    assert c2.a2 >= 0
    assert (c2.a2 == 0) == (gm == 0)


def test_monotone_in_prior_precision(params, risk1, risk2):
    grid = np.logspace(-9, -5, 30)
    c = [derive_model1_coeffs(params, GaussianDist(0, s), risk1) for s in grid]
    d = [derive_model2_coeffs(params, GaussianDist(0, s), risk2) for s in grid]
    assert np.all(np.diff([x.c for x in c]) > 0)
    assert np.all(np.diff([abs(x.a1 - risk1.r_xx) for x in c]) < 0)
    assert np.all(np.diff([x.a2 for x in d]) < 0)
