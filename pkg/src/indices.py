"""Efficiency indices: price of anarchy (feedback and open loop), price of
information, their analytic bounds and large-population approximations."""

import logging
import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import scipy.linalg

from src.config import SolverSettings, get_settings
from src.exceptions import (
    BoundInapplicable,
    DivisionByZero,
    GameValidationError,
    NoEquilibrium,
    SolverError,
    TargetOutOfRange,
)
from src.feedback_ne import build_m_tilde, solve_feedback
from src.game_model import derive_params, replicate_player, with_drift, with_weights
from src.openloop_ne import solve_openloop
from src.pydantic_models import (
    DerivedParams,
    FeedbackEquilibrium,
    FeedbackSolution,
    IndexReport,
    LargeNApprox,
    MonomialMatrix,
    OpenLoopEquilibrium,
    PoABounds,
    PoIDesignCheck,
    SocialOptimum,
    ValidatedGame,
    WeightVector,
)
from src.simulate import eval_linear_policy_costs
from src.social_opt import solve_social

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def _weights(game: ValidatedGame, mu: Optional[WeightVector]) -> np.ndarray:
    return game.mu if mu is None else np.asarray(mu.mu, dtype=float)


def price_of_anarchy_fb(
    game: ValidatedGame,
    mu: Optional[WeightVector],
    equilibria: Sequence[FeedbackEquilibrium],
    social: SocialOptimum,
) -> float:
    """Worst weighted feedback-equilibrium cost over the social optimum."""
    if not equilibria:
        raise NoEquilibrium("price of anarchy needs at least one feedback equilibrium")
    weights = _weights(game, mu)
    return max(float(weights @ np.asarray(eq.k)) for eq in equilibria) / social.k_hat


def price_of_anarchy_ol(ol: OpenLoopEquilibrium, social: SocialOptimum, mu: WeightVector) -> float:
    return float(np.asarray(mu.mu) @ np.asarray(ol.k_star)) / social.k_hat


def price_of_information(rho_ol: float, rho_fb: float) -> float:
    """Open-loop over feedback worst-case total cost; below 1 favours open loop."""
    if rho_fb == 0 or not math.isfinite(rho_fb):
        raise DivisionByZero(f"price of information undefined for rho_fb = {rho_fb}")
    return rho_ol / rho_fb


def gersgorin_bound(params: DerivedParams, a: float) -> float:
    """Largest absolute row sum of M-tilde.

    For a subset of size n the row sum grows with the sigmas it contains, so
    only the n largest sigmas need checking for each n.
    """
    sigma = np.sort(np.asarray(params.sigma))[::-1]
    n_players = len(sigma)
    sizes = np.arange(1, n_players + 1)
    sums = (abs(a) + np.cumsum(sigma) + (n_players - sizes)) / (2 * sizes - 1)
    return float(max(n_players + abs(a), sums.max()))


def spectral_radius(m_tilde: MonomialMatrix) -> float:
    return float(np.max(np.abs(scipy.linalg.eigvals(m_tilde.entries))))


def _spread_term(params: DerivedParams) -> float:
    # The empty-set row contributes N + a, so sigma_max is floored at 1.
    return len(params.sigma) + max(params.sigma_max, 1.0) - 1.0


def poa_bound_positive_drift(game: ValidatedGame, params: Optional[DerivedParams] = None) -> float:
    """Bound (1 + X/(2a)) mu^s_max b_bar for a > 0; mu^s_max b_bar equals s_bullet at equal weights."""
    if game.a <= 0:
        raise BoundInapplicable(f"bound requires a > 0, got a = {game.a}", field="a")
    params = params or derive_params(game)
    return (1 + _spread_term(params) / (2 * game.a)) * params.mu_s_max * params.b_bar


def poa_bound_zero_drift(game: ValidatedGame, params: Optional[DerivedParams] = None) -> float:
    if game.a != 0:
        raise BoundInapplicable(f"bound requires a = 0, got a = {game.a}", field="a")
    params = params or derive_params(game)
    n = len(params.sigma)
    return (
        params.mu_s_max / (math.sqrt(params.q_bar) * math.sqrt(params.mu_s_min))
        * math.sqrt(n) * _spread_term(params)
    )


def poa_bounds(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    mu: Optional[WeightVector] = None,
    m_tilde: Optional[MonomialMatrix] = None,
    social: Optional[SocialOptimum] = None,
    settings: Optional[SolverSettings] = None,
    radius: Optional[float] = None,
) -> PoABounds:
    """Analytic PoA bounds under the game's weights, or under mu when given.

    M-tilde does not depend on the weights, so a known spectral radius (from
    the eigen solve) or a prebuilt M-tilde is reused as is.
    """
    settings = settings or get_settings()
    if mu is not None:
        game = with_weights(game, mu)
        params, social = None, None
    params = params or derive_params(game)
    social = social or solve_social(game, params)
    if radius is None:
        if m_tilde is None and game.n <= settings.n_cap:
            m_tilde = build_m_tilde(params, game.a, settings)
        radius = spectral_radius(m_tilde) if m_tilde is not None else None

    a = game.a
    gersgorin = gersgorin_bound(params, a)
    scale = params.mu_s_max / social.k_hat

    cor_i = poa_bound_positive_drift(game, params) if a > 0 else None
    cor_ii = poa_bound_zero_drift(game, params) if a == 0 else None
    return PoABounds(
        gersgorin_bound=gersgorin,
        spectral_radius=radius,
        thm5_iii=None if radius is None else scale * (radius + a),
        thm5_iii_gersgorin=scale * (gersgorin + a),
        cor_i=cor_i,
        cor_ii=cor_ii,
    )


def large_population_approx(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    social: Optional[SocialOptimum] = None,
) -> LargeNApprox:
    """Large-N approximations; their validity conditions are reported, not enforced."""
    params = params or derive_params(game)
    social = social or solve_social(game, params)
    sigma = np.asarray(params.sigma)
    scale = math.sqrt(2 * params.sigma_bar)
    p_approx = sigma / scale
    others = p_approx.sum() - p_approx
    approx = LargeNApprox(
        p_approx=p_approx.tolist(),
        gain_approx=(-sigma / (game.b * scale)).tolist(),
        j_star_approx=params.q_bar * game.x0 ** 2 / scale,
        rho_fb_approx=params.q_bar / (social.k_hat * scale),
        rho_fb_approx_a0=math.sqrt(params.q_bar * params.b_bar / (2 * params.sigma_bar)),
        a_over_n=game.a / game.n,
        sigma_ratio=params.sigma_max / params.sigma_bar,
        drift_condition_met=bool(np.all(others > game.a)),
    )
    logger.info(
        f"Large-N conditions: a/N = {approx.a_over_n:.3g}, sigma_max/sigma_bar = {approx.sigma_ratio:.3g}, "
        f"p_-i > a: {approx.drift_condition_met}"
    )
    return approx


def approx_price_of_information(game: ValidatedGame, params: Optional[DerivedParams] = None) -> float:
    """Large-population PoI (sqrt2/2)(1 + sum mu_i q_i sigma_i / (q_bar sigma_bar)), derived for a = 0."""
    params = params or derive_params(game)
    return SQRT2 / 2 * (1 + _concentration(game, params))


def _concentration(game: ValidatedGame, params: DerivedParams) -> float:
    weighted = float(np.sum(game.mu * game.q * np.asarray(params.sigma)))
    return weighted / (params.q_bar * params.sigma_bar)


def poi_design_check(
    game: ValidatedGame,
    chi_target: float,
    params: Optional[DerivedParams] = None,
    mu: Optional[WeightVector] = None,
) -> PoIDesignCheck:
    """Necessary condition for the price of information to stay below chi_target."""
    if not SQRT2 / 2 < chi_target <= SQRT2:
        raise TargetOutOfRange(
            f"target {chi_target} outside (sqrt(2)/2, sqrt(2)]", field="chi_target"
        )
    if mu is not None:
        game, params = with_weights(game, mu), None
    params = params or derive_params(game)
    lhs = _concentration(game, params)
    rhs = SQRT2 * chi_target - 1
    return PoIDesignCheck(chi_target=chi_target, lhs=lhs, rhs=rhs, satisfied=lhs <= rhs)


def individualized_poa(
    game: ValidatedGame, social: SocialOptimum, equilibria: Sequence[FeedbackEquilibrium]
) -> np.ndarray:
    """Per-player cost under the social optimum over the worst Nash cost."""
    if not equilibria:
        raise NoEquilibrium("individualized PoA needs at least one feedback equilibrium")
    worst = np.max(np.array([eq.costs for eq in equilibria]), axis=0)
    return eval_linear_policy_costs(game, social.gains) / worst


def compute_indices(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    solution: Optional[FeedbackSolution] = None,
    settings: Optional[SolverSettings] = None,
) -> IndexReport:
    settings = settings or get_settings()
    params = params or derive_params(game)
    solution = solution or solve_feedback(game, params, settings)
    social = solve_social(game, params)
    ol = solve_openloop(game, params)

    rho_fb = price_of_anarchy_fb(game, None, solution.equilibria, social)
    rho_ol = price_of_anarchy_ol(ol, social, game.weights)
    chi = price_of_information(rho_ol, rho_fb)
    bounds = poa_bounds(game, params, social=social, settings=settings, radius=solution.spectral_radius)

    radius = bounds.spectral_radius if bounds.spectral_radius is not None else bounds.gersgorin_bound
    denominator = params.mu_s_max * (radius + game.a)
    chi_lower = float(game.mu @ np.asarray(ol.k_star)) / denominator if denominator > 0 else None

    if not solution.multiplicity_verified:
        logger.warning("Feedback PoA computed from a single equilibrium: reported value is a lower bound")
    report = IndexReport(
        rho_fb=rho_fb,
        rho_ol=rho_ol,
        chi=chi,
        chi_approx=approx_price_of_information(game, params) if game.a == 0 else None,
        rho_fb_is_lower_bound=not solution.multiplicity_verified,
        n_equilibria=len(solution.equilibria),
        gersgorin_bound=bounds.gersgorin_bound,
        spectral_radius=bounds.spectral_radius,
        poa_bound_thm5_iii=bounds.thm5_iii,
        poa_bound_thm5_iii_gersgorin=bounds.thm5_iii_gersgorin,
        poa_bound_cor_i=bounds.cor_i,
        poa_bound_cor_ii=bounds.cor_ii,
        chi_lower_bound=chi_lower,
        approximations=large_population_approx(game, params, social),
    )
    logger.info(f"Indices: rho_fb = {rho_fb:.6g}, rho_ol = {rho_ol:.6g}, chi = {chi:.6g}")
    return report


SWEEP_COLUMNS = (
    "rho_fb", "rho_ol", "chi", "chi_approx", "n_equilibria",
    "gersgorin_bound", "spectral_radius", "poa_bound_thm5_iii", "chi_lower_bound",
)


def sweep_indices(
    game: ValidatedGame,
    param: str,
    values: Sequence[float],
    settings: Optional[SolverSettings] = None,
) -> pd.DataFrame:
    """Index report along a sweep of N (replicating player 1) or of the drift a.

    Points where no equilibrium is found are kept with empty values.
    """
    if param not in ("N", "a"):
        raise GameValidationError(f"cannot sweep parameter {param!r}; use N or a", field="param")
    rows = []
    for value in values:
        point = replicate_player(game, int(value)) if param == "N" else with_drift(game, float(value))
        row = {param: int(value) if param == "N" else float(value)}
        try:
            report = compute_indices(point, settings=settings)
        except SolverError as e:
            logger.warning(f"Sweep point {param} = {value}: {e}")
            row.update({column: np.nan for column in SWEEP_COLUMNS})
        else:
            row.update({column: getattr(report, column) for column in SWEEP_COLUMNS})
            row["rho_fb_is_lower_bound"] = report.rho_fb_is_lower_bound
        rows.append(row)
    return pd.DataFrame(rows)
