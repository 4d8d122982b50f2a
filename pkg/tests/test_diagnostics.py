import math
from decimal import Decimal, getcontext
from itertools import combinations

import numpy as np
import pytest

import ewselect.diagnostics as diag
from ewselect import (Dataset, DomainError, TooLargeError,
                      covariance_subset_bounds, design_report, is_identifiable,
                      max_restricted_singular, min_fullrank_singular_estimate,
                      min_restricted_singular, signal_strength_threshold,
                      subset_min_singular)

from conftest import normalized_gaussian


def svd_oracle(X, s):
    """Per-subset smallest singular values of X_J/sqrt(n), one svd at a time."""
    n = X.shape[0]
    vals = [np.linalg.svd(X[:, list(c)] / math.sqrt(n), compute_uv=False)[-1]
            for c in combinations(range(X.shape[1]), s)]
    return min(vals), max(vals)


class TestRestrictedSingularValues:
    def test_orthonormal_columns_give_one(self, rng):
        n = 16
        Q, _ = np.linalg.qr(rng.standard_normal((n, 6)))
        d = Dataset(Q * math.sqrt(n), rng.standard_normal(n))
        for s in (1, 2, 4, 6):
            assert min_restricted_singular(d, s) == pytest.approx(1.0, abs=1e-10)

    def test_duplicate_columns_give_zero(self, rng):
        X = rng.standard_normal((12, 5))
        X[:, 4] = X[:, 2]
        d = Dataset(X, rng.standard_normal(12))
        assert min_restricted_singular(d, 2) <= 1e-12

    def test_integer_matrix_matches_eigensolver(self):
        X = np.array([[2, 0, 1, 1],
                      [0, 3, 1, 0],
                      [1, 1, 1, 2],
                      [0, 1, 2, 1],
                      [1, 0, 0, 3],
                      [2, 2, 1, 0]], dtype=float)
        d = Dataset(X, np.zeros(6))
        lo, hi = svd_oracle(X, 2)
        assert min_restricted_singular(d, 2) == pytest.approx(lo, abs=1e-10)
        assert max_restricted_singular(d, 2) == pytest.approx(hi, abs=1e-10)

    def test_random_designs_match_oracle(self, rng):
        for p, s in ((10, 2), (12, 3), (15, 4)):
            X = rng.standard_normal((20, p))
            d = Dataset(X, rng.standard_normal(20))
            lo, hi = svd_oracle(X, s)
            assert min_restricted_singular(d, s) == pytest.approx(lo, abs=1e-10)
            assert max_restricted_singular(d, s) == pytest.approx(hi, abs=1e-10)

    def test_monotone_and_ordered(self, rng):
        X = normalized_gaussian(rng, 25, 9)
        d = Dataset(X, rng.standard_normal(25))
        nus = [min_restricted_singular(d, s) for s in range(1, 7)]
        kaps = [max_restricted_singular(d, s) for s in range(1, 7)]
        assert all(nus[i] >= nus[i + 1] - 1e-12 for i in range(5))
        assert all(kaps[i] >= kaps[i + 1] - 1e-12 for i in range(5))
        assert all(n <= k + 1e-12 for n, k in zip(nus, kaps))
        norm_bound = float(np.max(np.linalg.norm(X, axis=0))) / math.sqrt(25)
        assert kaps[0] <= norm_bound + 1e-9

    def test_mc_is_upper_bound_on_min(self, rng):
        X = rng.standard_normal((20, 11))
        d = Dataset(X, rng.standard_normal(20))
        exact = min_restricted_singular(d, 3)
        for seed in range(5):
            mc = min_restricted_singular(d, 3, mode="mc", samples=40, seed=seed)
            assert mc >= exact - 1e-12

    def test_pruned_scan_equals_direct(self, rng, monkeypatch):
        X = normalized_gaussian(rng, 80, 22)
        d = Dataset(X, rng.standard_normal(80))
        direct = (min_restricted_singular(d, 3), max_restricted_singular(d, 3))
        monkeypatch.setattr(diag, "_DIRECT_LIMIT", 10)
        pruned = (min_restricted_singular(d, 3), max_restricted_singular(d, 3))
        assert direct == pruned

    def test_cap_and_override(self, rng):
        X = rng.standard_normal((30, 60))
        d = Dataset(X, rng.standard_normal(30))
        with pytest.raises(TooLargeError):
            min_restricted_singular(d, 5)   # C(60,5) is over the cap
        with pytest.raises(DomainError):
            min_restricted_singular(d, 0)

    def test_subset_min_singular(self, rng):
        X = rng.standard_normal((18, 7))
        d = Dataset(X, rng.standard_normal(18))
        J = (1, 4, 6)
        oracle = np.linalg.svd(X[:, list(J)] / math.sqrt(18),
                               compute_uv=False)[-1]
        assert subset_min_singular(d, J) == pytest.approx(oracle, rel=1e-12)

    def test_fullrank_envelope_is_upper_bound(self, rng):
        X = rng.standard_normal((20, 8))
        d = Dataset(X, rng.standard_normal(20))
        est = min_fullrank_singular_estimate(d, samples=2000, seed=3)
        # true minimum over full-rank subsets is below any sampled value
        true_min = math.inf
        for s in range(1, 9):
            lo, _ = svd_oracle(X, s)
            if lo > 1e-5:
                true_min = min(true_min, lo)
        assert est >= true_min - 1e-9


class TestIdentifiability:
    def test_orthogonal_identifiable(self, rng):
        n = 20
        Q, _ = np.linalg.qr(rng.standard_normal((n, 8)))
        d = Dataset(Q * math.sqrt(n), rng.standard_normal(n))
        assert is_identifiable(d, 2)

    def test_duplicate_not_identifiable(self, rng):
        X = rng.standard_normal((15, 6))
        X[:, 5] = -X[:, 0]
        d = Dataset(X, rng.standard_normal(15))
        assert not is_identifiable(d, 1)

    def test_random_gaussian_identifiable(self, rng):
        X = rng.standard_normal((30, 10))
        d = Dataset(X, rng.standard_normal(30))
        assert is_identifiable(d, 2)
        assert min_restricted_singular(d, 4) > 1e-3


class TestSignalThreshold:
    def test_zero_noise(self):
        assert signal_strength_threshold(0.0, 5.0, 100, 0.5) == 0.0

    def test_halving_nu_doubles(self):
        a = signal_strength_threshold(1.0, 5.0, 100, 0.5)
        b = signal_strength_threshold(1.0, 5.0, 100, 0.25)
        assert b == pytest.approx(2.0 * a, rel=1e-14)

    def test_high_precision_value(self):
        getcontext().prec = 50
        sigma, lam, n, nu = 1.0, 4.0 * math.log(200), 100, 0.5
        oracle = (Decimal(3) * Decimal(sigma)
                  * (Decimal(lam) / Decimal(n)).sqrt() / Decimal(nu))
        got = signal_strength_threshold(sigma, lam, n, nu)
        assert got == pytest.approx(float(oracle), rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            signal_strength_threshold(1.0, 5.0, 100, 0.0)


class TestCovarianceBounds:
    def test_identity(self):
        for s in (1, 2, 3):
            assert covariance_subset_bounds(np.eye(6), s) == (1.0, 1.0)

    def test_equicorrelation_closed_form(self):
        # 2x2 principal blocks of the 0.5-equicorrelation matrix have
        # eigenvalues {1.5, 0.5}
        S = np.full((5, 5), 0.5)
        np.fill_diagonal(S, 1.0)
        eta, lam = covariance_subset_bounds(S, 2)
        assert eta == pytest.approx(3.0, abs=1e-12)
        assert lam == pytest.approx(0.5, abs=1e-12)

    def test_size_one_gives_diagonal(self):
        S = np.diag([2.0, 0.3, 1.1])
        eta, lam = covariance_subset_bounds(S, 1)
        assert eta == 1.0
        assert lam == pytest.approx(0.3, rel=1e-14)

    def test_singular_flagged_as_infinite(self):
        S = np.ones((4, 4))
        eta, lam = covariance_subset_bounds(S, 2)
        assert eta == math.inf
        assert lam <= 1e-12

    def test_validation(self):
        with pytest.raises(DomainError):
            covariance_subset_bounds(np.array([[1.0, 0.5], [0.4, 1.0]]), 1)


class TestDesignReport:
    def test_fields_and_threshold(self, rng):
        X = normalized_gaussian(rng, 40, 10)
        d = Dataset(X, rng.standard_normal(40), 1.0)
        rep = design_report(d, 3, lam=10.0)
        assert rep.s == 3
        assert 0 < rep.min_singular <= rep.max_singular
        assert rep.identifiable_2s is True
        assert rep.signal_threshold == pytest.approx(
            signal_strength_threshold(1.0, 10.0, 40, rep.min_singular))

    def test_mc_mode_flagged(self, rng):
        X = normalized_gaussian(rng, 40, 10)
        d = Dataset(X, rng.standard_normal(40))
        rep = design_report(d, 3, mode="mc", samples=64, seed=2)
        assert rep.mode == "mc"
        assert rep.samples == 64
        assert rep.identifiable_2s is None
