import json

import numpy as np
import pytest

from critnls.errors import ConfigurationError
from critnls.grid import ComplexField2D, GridSpec, mass
from critnls.multiplier import (
    AUDIT_CONSTANT,
    MultiplierProfile,
    apply_I,
    apply_I_D,
    audit_case1_vanishing,
    audit_case2_bound,
    audit_case2_sixlinear,
    audit_trivial_bound,
    lp_project,
    run_all_audits,
)

GRID = GridSpec(16.0, 128)


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    n = grid.points
    return ComplexField2D(grid, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


class TestSymbol:
    def test_pieces(self):
        p = MultiplierProfile(16.0, 0.9)
        assert p.eval_m(0.0) == 1.0
        assert p.eval_m(16.0) == 1.0
        assert p.eval_m(96.0) == pytest.approx((96.0 / 16.0) ** (-0.1), rel=1e-12)
        # continuous across the transition band edges
        assert p.eval_m(48.0 * (1 - 1e-9)) == pytest.approx(p.eval_m(48.0), rel=1e-6)
        assert p.eval_m(16.0 * (1 + 1e-9)) == pytest.approx(1.0, rel=1e-6)

    def test_scalar_and_array_agree(self):
        p = MultiplierProfile(8.0, 0.7)
        xs = np.array([0.5, 8.0, 12.0, 30.0, 100.0])
        arr = p.eval_m(xs)
        assert arr.shape == xs.shape
        for x, v in zip(xs, arr):
            assert p.eval_m(float(x)) == pytest.approx(v, rel=1e-14)

    def test_hermite_transition_is_c1_in_loglog(self):
        p = MultiplierProfile(16.0, 0.9)
        # slope of log m vs log x approaches 0 at N and s-1 at 3N
        eps = 1e-6
        for x0, target in ((16.0 * (1 + 1e-4), 0.0), (48.0 * (1 - 1e-4), -0.1)):
            d = (np.log(p.eval_m(x0 * (1 + eps))) - np.log(p.eval_m(x0))) / np.log1p(eps)
            assert d == pytest.approx(target, abs=5e-3)

    def test_bracket_monotonicity_enforced(self):
        # valid profiles construct without complaint
        for n in (2.0, 8.0, 64.0):
            for s in (0.7, 0.9):
                MultiplierProfile(n, s)
        MultiplierProfile(1.0, 0.9)
        # hermite band slope reaches (4/3)(s-1), so small s breaks the
        # m(x)<x>^{1/2} bracket and must be rejected at construction
        with pytest.raises(ConfigurationError):
            MultiplierProfile(8.0, 0.55)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            MultiplierProfile(0.5, 0.9)
        with pytest.raises(ConfigurationError):
            MultiplierProfile(8.0, 1.2)
        with pytest.raises(ConfigurationError):
            MultiplierProfile(8.0, 0.9, transition="cubic")


class TestOperators:
    def test_apply_I_contracts_mass(self):
        p = MultiplierProfile(8.0, 0.9)
        f = random_field(GRID, seed=1)
        assert mass(apply_I(p, f)) <= mass(f) + 1e-12

    def test_apply_I_identity_on_low_frequencies(self):
        g = GridSpec(16.0, 64)
        xs, _ = g.meshgrid()
        f = ComplexField2D(g, np.exp(1j * 2.0 * np.pi / 16.0 * xs))  # |k| < N
        p = MultiplierProfile(8.0, 0.9)
        assert np.allclose(apply_I(p, f).values, f.values)

    def test_unresolved_cutoff_rejected(self):
        p = MultiplierProfile(1e4, 0.9)
        with pytest.raises(ConfigurationError):
            apply_I(p, random_field(GRID))

    def test_apply_I_D_dominates_apply_I(self):
        p = MultiplierProfile(8.0, 0.9)
        f = random_field(GRID, seed=2)
        assert mass(apply_I_D(p, f)) >= mass(apply_I(p, f))

    def test_lp_partition_reconstructs(self):
        # band-limit to the top tiled band so the dyadic bands cover it
        from critnls.grid import apply_symbol

        levels = int(np.floor(np.log2(GRID.nyquist))) + 1
        top = 2.0 ** (levels - 1)
        f = apply_symbol(random_field(GRID, seed=3), lambda k: (k <= top).astype(float))
        total = np.zeros_like(f.values)
        for level in range(levels):
            total = total + lp_project(f, level, disjoint=True).values
        assert np.allclose(total, f.values, atol=1e-12)

    def test_lp_projections_overlap_when_not_disjoint(self):
        f = random_field(GRID, seed=4)
        levels = int(np.floor(np.log2(GRID.nyquist))) + 1
        m = sum(mass(lp_project(f, level)) for level in range(levels))
        assert m >= mass(f) - 1e-9


class TestAudits:
    PROFILE = MultiplierProfile(16.0, 0.9)

    def test_case1_factor_vanishes(self):
        rep = audit_case1_vanishing(self.PROFILE, 2000, seed=1)
        assert rep.violations == 0
        assert rep.max_ratio == 0.0

    def test_case2_mvt_bound(self):
        rep = audit_case2_bound(self.PROFILE, 2000, seed=2)
        assert rep.violations == 0
        assert rep.max_ratio <= AUDIT_CONSTANT

    def test_trivial_bound(self):
        rep = audit_trivial_bound(self.PROFILE, 2000, seed=3)
        assert rep.violations == 0

    def test_sixlinear_bound(self):
        rep = audit_case2_sixlinear(self.PROFILE, 2000, seed=4)
        assert rep.violations == 0

    def test_reports_serialize_and_are_seed_deterministic(self):
        a = audit_case2_bound(self.PROFILE, 500, seed=5)
        b = audit_case2_bound(self.PROFILE, 500, seed=5)
        assert a.max_ratio == b.max_ratio
        payload = json.loads(a.to_json())
        assert payload["regime"] == a.regime
        assert payload["samples"] == 500

    def test_run_all_audits_covers_every_regime(self):
        reports = run_all_audits(self.PROFILE, 500, seed=0)
        assert len(reports) == 4
        assert len({r.regime for r in reports}) == 4
