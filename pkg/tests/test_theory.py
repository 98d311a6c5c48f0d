import math

import numpy as np
import pytest

from critnls.theory import (
    DEFAULT_PARAMS,
    ExponentParams,
    n_exponent,
    n_of_lambda,
    p_of_s,
    s_q,
)


class TestSQ:
    def test_reference_value(self):
        assert s_q() == pytest.approx((1.0 + math.sqrt(11.0)) / 5.0, rel=1e-14)
        assert s_q() == pytest.approx(0.863325, abs=1e-6)

    def test_root_of_defining_quadratic(self):
        s = s_q()
        assert 10.0 * s * s + (DEFAULT_PARAMS.alpha6 - 6.0) * s - 4.0 == pytest.approx(
            0.0, abs=1e-12
        )

    def test_epsilon_moves_threshold_up(self):
        assert s_q(ExponentParams(epsilon=0.05)) > s_q()


class TestP:
    def test_boundary_values(self):
        assert p_of_s(1.0) == 0.0
        # p -> 2 at s = s_Q from above
        assert p_of_s(s_q() + 1e-9) == pytest.approx(2.0, abs=1e-6)

    def test_strictly_decreasing_and_below_two(self):
        svals = np.linspace(s_q() + 1e-6, 1.0, 1000)
        pvals = np.array([p_of_s(float(s)) for s in svals])
        assert np.all(pvals < 2.0)
        assert np.all(np.diff(pvals) < 0.0)

    def test_invalid_s_rejected(self):
        with pytest.raises(ValueError):
            p_of_s(0.0)
        with pytest.raises(ValueError):
            p_of_s(1.5)
        with pytest.raises(ValueError):
            p_of_s(0.3)  # below the exponent threshold: denominator <= 0


class TestCutoffLaw:
    def test_identity_at_unit_lambda(self):
        assert n_of_lambda(1.0, 0.9) == 1.0

    def test_power_law(self):
        s = 0.9
        a = n_exponent(s)
        assert n_of_lambda(4.0, s) == pytest.approx(4.0**a, rel=1e-12)
        assert a > 0.0

    def test_lambda_below_one_rejected(self):
        with pytest.raises(ValueError):
            n_of_lambda(0.5, 0.9)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            ExponentParams(alpha6=2.5)
        with pytest.raises(ValueError):
            ExponentParams(alpha4=0.0)
        with pytest.raises(ValueError):
            ExponentParams(epsilon=-0.1)
