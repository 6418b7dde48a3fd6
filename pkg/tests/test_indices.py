import math

import numpy as np
import pytest

from conftest import flow_game, random_game
from src.exceptions import (
    BoundInapplicable,
    DivisionByZero,
    GameValidationError,
    NoEquilibrium,
    TargetOutOfRange,
    WeightSumMismatch,
)
from src.feedback_ne import build_m_tilde, solve_feedback, solve_feedback_eigen
from src.game_model import derive_params, with_weights
from src.indices import (
    approx_price_of_information,
    compute_indices,
    gersgorin_bound,
    individualized_poa,
    large_population_approx,
    poa_bound_positive_drift,
    poa_bound_zero_drift,
    poa_bounds,
    poi_design_check,
    price_of_anarchy_fb,
    price_of_anarchy_ol,
    price_of_information,
    spectral_radius,
    sweep_indices,
)
from src.openloop_ne import solve_openloop
from src.pydantic_models import WeightVector
from src.social_opt import solve_social

SQRT2 = math.sqrt(2)


def symmetric_chi(n):
    return math.sqrt(2 - 1 / n) * (0.5 + 1 / (2 * n))


class TestPriceOfAnarchy:
    def test_flow2(self, flow2):
        social = solve_social(flow2)
        rho = price_of_anarchy_fb(flow2, None, solve_feedback_eigen(flow2), social)
        assert rho == pytest.approx(1.1547, abs=5e-4)
        assert price_of_anarchy_ol(solve_openloop(flow2), social, flow2.weights) == pytest.approx(1.0607, abs=5e-4)

    def test_flow3(self, flow3):
        rho = price_of_anarchy_fb(flow3, None, solve_feedback_eigen(flow3), solve_social(flow3))
        assert rho == pytest.approx(1.3416, abs=5e-4)

    def test_single_player_is_efficient(self, rng):
        for _ in range(5):
            game = random_game(rng, n=1)
            social = solve_social(game)
            assert price_of_anarchy_fb(game, None, solve_feedback_eigen(game), social) == pytest.approx(1.0)
            assert price_of_anarchy_ol(solve_openloop(game), social, game.weights) == pytest.approx(1.0)

    def test_empty_equilibria(self, flow2):
        with pytest.raises(NoEquilibrium):
            price_of_anarchy_fb(flow2, None, [], solve_social(flow2))

    @pytest.mark.parametrize("n", [1, 2, 5, 17])
    def test_symmetric_ol_closed_form(self, n):
        game = flow_game(n)
        rho = price_of_anarchy_ol(solve_openloop(game), solve_social(game), game.weights)
        assert rho == pytest.approx(math.sqrt(n) * (n + 1) / (2 * n), rel=1e-12)


class TestPriceOfInformation:
    def test_flow_values(self, flow2, flow3):
        assert compute_indices(flow2).chi == pytest.approx(0.9184, abs=5e-4)
        assert compute_indices(flow3).chi == pytest.approx(0.8607, abs=5e-4)

    def test_identity(self):
        assert price_of_information(1.3, 1.3) == 1.0

    def test_zero_denominator(self):
        with pytest.raises(DivisionByZero):
            price_of_information(1.0, 0.0)
        with pytest.raises(ZeroDivisionError):
            price_of_information(1.0, 0.0)

    @pytest.mark.parametrize("n", list(range(1, 101, 3)))
    def test_symmetric_exact(self, n, settings):
        fast = settings.model_copy(update={"n_cap": 6})
        assert compute_indices(flow_game(n), settings=fast).chi == pytest.approx(symmetric_chi(n), abs=1e-10)

    def test_corridor_and_limit(self):
        for n in range(4, 101):
            chi = symmetric_chi(n)
            assert SQRT2 / 2 <= chi <= SQRT2
            assert chi - SQRT2 / 2 <= 1 / n

    def test_open_loop_wins_from_two_players(self):
        assert symmetric_chi(1) == pytest.approx(1.0)
        for n in range(2, 60):
            assert symmetric_chi(n) < 1

    def test_corridor_for_large_heterogeneous_games(self, rng, settings):
        fast = settings.model_copy(update={"n_cap": 1})
        for _ in range(5):
            game = random_game(rng, n=30, a=0.0, sigma_range=(0.5, 1.5))
            params = derive_params(game)
            assert params.sigma_max / params.sigma_bar <= 0.1
            chi = compute_indices(game, settings=fast).chi
            assert SQRT2 / 2 - 0.05 <= chi <= SQRT2 + 0.05

    def test_invariant_to_x0(self, hetero3):
        base = compute_indices(hetero3)
        scaled = compute_indices(hetero3.with_x0(-5.0))
        assert scaled.rho_fb == pytest.approx(base.rho_fb)
        assert scaled.rho_ol == pytest.approx(base.rho_ol)
        assert scaled.chi == pytest.approx(base.chi)


class TestBounds:
    def test_flow2_gersgorin(self, flow2):
        params = derive_params(flow2)
        m = build_m_tilde(params, 0.0)
        assert gersgorin_bound(params, 0.0) == pytest.approx(2.0)
        assert spectral_radius(m) == pytest.approx(1.1547, abs=5e-4)
        assert gersgorin_bound(params, 0.0) == pytest.approx(np.abs(m.entries).sum(axis=1).max())

    def test_flow2_spectral_bound_is_tight(self, flow2):
        bounds = poa_bounds(flow2)
        assert bounds.thm5_iii == pytest.approx(1.1547, abs=5e-4)
        assert bounds.cor_i is None
        assert bounds.cor_ii is not None

    def test_gersgorin_is_max_row_sum(self, random_games):
        for game in random_games[:60]:
            params = derive_params(game)
            m = build_m_tilde(params, game.a)
            row_sums = np.abs(m.entries).sum(axis=1).max()
            assert gersgorin_bound(params, game.a) == pytest.approx(row_sums, rel=1e-12)

    def test_bound_chain(self, random_games):
        for game in random_games:
            report = compute_indices(game)
            assert report.spectral_radius <= report.gersgorin_bound + 1e-9
            assert report.rho_fb <= report.poa_bound_thm5_iii + 1e-9
            assert report.poa_bound_thm5_iii <= report.poa_bound_thm5_iii_gersgorin + 1e-9
            if report.poa_bound_cor_i is not None:
                assert report.poa_bound_thm5_iii_gersgorin <= report.poa_bound_cor_i + 1e-9
            assert report.rho_fb >= 1 - 1e-10
            assert report.rho_ol >= 1 - 1e-10
            assert abs(report.chi * report.rho_fb - report.rho_ol) <= 1e-9 * report.rho_ol

    def test_zero_drift_bound(self, rng):
        for _ in range(30):
            game = random_game(rng, a=0.0)
            report = compute_indices(game)
            assert report.poa_bound_cor_i is None
            assert report.rho_fb <= report.poa_bound_thm5_iii_gersgorin + 1e-9
            assert report.poa_bound_thm5_iii_gersgorin <= report.poa_bound_cor_ii + 1e-9

    @pytest.mark.parametrize("n", [2, 5, 8])
    def test_flow_zero_drift_bound(self, n):
        game = flow_game(n)
        assert poa_bound_zero_drift(game) >= compute_indices(game).rho_fb

    def test_wrong_sign_of_drift(self, flow2, hetero3):
        with pytest.raises(BoundInapplicable):
            poa_bound_positive_drift(flow2)
        with pytest.raises(BoundInapplicable):
            poa_bound_zero_drift(hetero3)
        assert poa_bound_positive_drift(hetero3) >= compute_indices(hetero3).rho_fb

    def test_chi_lower_bound(self, random_games):
        for game in random_games[:80]:
            report = compute_indices(game)
            if report.chi_lower_bound is not None:
                assert report.chi_lower_bound <= report.chi + 1e-9

    def test_above_cap_uses_surrogate(self, settings):
        fast = settings.model_copy(update={"n_cap": 3})
        bounds = poa_bounds(flow_game(6), settings=fast)
        assert bounds.spectral_radius is None and bounds.thm5_iii is None
        assert bounds.thm5_iii_gersgorin > 0

    def test_reuses_eigen_solve_radius(self, flow3, monkeypatch):
        expected = spectral_radius(build_m_tilde(derive_params(flow3), flow3.a))

        def second_decomposition(m_tilde):
            raise AssertionError("M-tilde decomposed twice")

        monkeypatch.setattr("src.indices.spectral_radius", second_decomposition)
        report = compute_indices(flow3)
        assert report.spectral_radius == pytest.approx(expected, rel=1e-12)
        assert report.poa_bound_thm5_iii >= report.rho_fb - 1e-9

    def test_other_weights(self, hetero3):
        mu = WeightVector(mu=[0.2, 0.3, 0.5])
        reweighted = poa_bounds(hetero3, mu=mu)
        assert reweighted == poa_bounds(with_weights(hetero3, mu))
        assert reweighted.thm5_iii != poa_bounds(hetero3).thm5_iii
        assert poa_bounds(hetero3, mu=hetero3.weights) == poa_bounds(hetero3)

    def test_invalid_weights(self, hetero3):
        with pytest.raises(WeightSumMismatch):
            poa_bounds(hetero3, mu=WeightVector(mu=[0.2, 0.3, 0.6]))


class TestLargePopulation:
    def test_flow50(self, settings):
        game = flow_game(50)
        report = compute_indices(game, settings=settings.model_copy(update={"n_cap": 10}))
        assert report.rho_fb_is_lower_bound
        assert abs(report.rho_fb - math.sqrt(25)) / report.rho_fb <= 0.02
        approx = report.approximations
        assert approx.rho_fb_approx_a0 == pytest.approx(5.0)
        assert approx.rho_fb_approx == pytest.approx(5.0)
        exact_p = 1 / math.sqrt(99)
        assert abs(approx.p_approx[0] - exact_p) / exact_p <= 0.02

    def test_fields_positive_and_conditions(self, hetero3):
        approx = large_population_approx(hetero3)
        assert min(approx.p_approx) > 0
        assert approx.j_star_approx > 0 and approx.rho_fb_approx > 0
        assert approx.a_over_n == pytest.approx(0.5 / 3)
        assert approx.sigma_ratio > 1 / 3
        assert all(g * b < 0 for g, b in zip(approx.gain_approx, hetero3.spec.b))

    def test_approx_poi_symmetric(self):
        for n in range(1, 30):
            assert approx_price_of_information(flow_game(n)) == pytest.approx(SQRT2 / 2 * (1 + 1 / n))

    def test_approx_poi_below_one_from_three_players(self):
        assert approx_price_of_information(flow_game(2)) > 1
        assert approx_price_of_information(flow_game(3)) < 1


class TestDesignCheck:
    def test_symmetric_threshold(self):
        assert not poi_design_check(flow_game(2), 1.0).satisfied
        for n in (3, 4, 10):
            check = poi_design_check(flow_game(n), 1.0)
            assert check.satisfied
            assert check.lhs == pytest.approx(1 / n)
            assert check.rhs == pytest.approx(SQRT2 - 1)

    def test_maximal_target_always_passes(self, random_games):
        for game in random_games[:50]:
            assert poi_design_check(game, SQRT2).satisfied

    def test_other_weights(self, hetero3):
        mu = WeightVector(mu=[0.2, 0.3, 0.5])
        check = poi_design_check(hetero3, 1.0, mu=mu)
        assert check == poi_design_check(with_weights(hetero3, mu), 1.0)
        assert check.lhs != pytest.approx(poi_design_check(hetero3, 1.0).lhs)
        assert poi_design_check(hetero3, 1.0, mu=hetero3.weights) == poi_design_check(hetero3, 1.0)
        with pytest.raises(WeightSumMismatch):
            poi_design_check(hetero3, 1.0, mu=WeightVector(mu=[0.5, 0.5, 0.5]))

    @pytest.mark.parametrize("target", [0.5, SQRT2 / 2, 1.5])
    def test_target_out_of_range(self, flow2, target):
        with pytest.raises(TargetOutOfRange):
            poi_design_check(flow2, target)


class TestReports:
    def test_flow3_report(self, flow3):
        report = compute_indices(flow3)
        assert report.rho_fb == pytest.approx(1.3416, abs=5e-4)
        assert report.chi == pytest.approx(0.8607, abs=5e-4)
        assert report.n_equilibria == 1
        assert not report.rho_fb_is_lower_bound

    def test_chi_approx_only_at_zero_drift(self, flow3, hetero3):
        assert compute_indices(flow3).chi_approx == pytest.approx(SQRT2 / 2 * (1 + 1 / 3))
        assert compute_indices(hetero3).chi_approx is None

    def test_sweep_drift_leaves_chi_approx_empty(self, flow2):
        frame = sweep_indices(flow2, "a", [-0.5, 0.0, 0.5])
        assert frame["chi_approx"].isna().tolist() == [True, False, True]
        assert not np.isnan(frame["chi"]).any()

    def test_individualized_poa(self, flow2):
        ratios = individualized_poa(flow2, solve_social(flow2), solve_feedback(flow2).equilibria)
        np.testing.assert_allclose(ratios, [math.sqrt(3) / 2] * 2)

    def test_sweep_population(self, flow2):
        frame = sweep_indices(flow2, "N", [2, 3, 4])
        assert frame["N"].tolist() == [2, 3, 4]
        np.testing.assert_allclose(frame["chi"], [symmetric_chi(n) for n in (2, 3, 4)], atol=1e-10)

    def test_sweep_drift(self, hetero3):
        frame = sweep_indices(hetero3, "a", np.linspace(-1, 1, 5))
        assert len(frame) == 5
        assert (frame["rho_fb"].dropna() >= 1 - 1e-10).all()

    def test_sweep_unknown_parameter(self, flow2):
        with pytest.raises(GameValidationError):
            sweep_indices(flow2, "x0", [1.0])
