"""Altruistic feedback game and the price of cooperation.

Player i minimizes sum_j lambda_i^j J_j. Against fixed linear gains of the
others this is a scalar LQR problem, so equilibria are sought by Gauss-Seidel
best-response iteration. Convergence is not guaranteed; failure is reported.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from src.config import SolverSettings, get_settings
from src.exceptions import InvalidCooperationMatrix, NoEquilibrium, NonConvergence
from src.game_model import validate_cooperation
from src.pydantic_models import (
    AltruisticEquilibrium,
    CooperationMatrix,
    DerivedParams,
    FeedbackEquilibrium,
    PoCReport,
    ValidatedGame,
)
from src.simulate import eval_linear_policy_costs

logger = logging.getLogger(__name__)


def _resolve_cooperation(game: ValidatedGame, cooperation: Optional[CooperationMatrix]) -> np.ndarray:
    cooperation = cooperation or game.cooperation
    if cooperation is None:
        raise InvalidCooperationMatrix("no cooperation matrix given", field="lambda")
    validate_cooperation(cooperation, game.n)
    return np.asarray(cooperation.weights, dtype=float)


def stationarity_residual(
    game: ValidatedGame, lam: np.ndarray, gains: np.ndarray, values: np.ndarray
) -> np.ndarray:
    """2 K_i (a + sum_j b_j g_j) + sum_j lambda_i^j (q_j + r_j g_j^2), per player."""
    drift = game.a + game.b @ gains
    return 2 * values * drift + lam @ (game.q + game.r * gains ** 2)


def solve_altruistic_fb(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    cooperation: Optional[CooperationMatrix] = None,
    settings: Optional[SolverSettings] = None,
) -> AltruisticEquilibrium:
    settings = settings or get_settings()
    lam = _resolve_cooperation(game, cooperation)
    a, b, q, r = game.a, game.b, game.q, game.r
    n = game.n
    self_weight = np.diag(lam)
    control_weight = self_weight * r
    base_state_weight = lam @ q

    gains = np.zeros(n)
    change = np.inf
    iterations = 0
    while iterations < settings.altruistic_max_iter:
        iterations += 1
        previous = gains.copy()
        for i in range(n):
            drift = a + b @ gains - b[i] * gains[i]
            others = lam[i] @ (r * gains ** 2) - self_weight[i] * r[i] * gains[i] ** 2
            state_weight = base_state_weight[i] + others
            value = (control_weight[i] / b[i] ** 2) * (
                drift + np.sqrt(drift ** 2 + state_weight * b[i] ** 2 / control_weight[i])
            )
            gains[i] = -b[i] * value / control_weight[i]
        if not np.all(np.isfinite(gains)):
            raise NonConvergence("best-response iteration produced non-finite gains", previous, np.inf)
        change = float(np.max(np.abs(gains - previous)))
        if change <= settings.altruistic_tol:
            break
    else:
        logger.error(f"Best-response iteration stalled after {iterations} sweeps, change {change:.3e}")
        raise NonConvergence(
            f"no convergence in {iterations} iterations (last gain change {change:.3e})",
            gains.tolist(),
            change,
        )

    values = -gains * control_weight / b
    residual = float(np.max(np.abs(stationarity_residual(game, lam, gains, values))))
    if residual > settings.altruistic_residual_tol:
        raise NonConvergence(
            f"stationarity residual {residual:.3e} above tolerance at the converged gains",
            gains.tolist(),
            change,
        )

    eq = AltruisticEquilibrium(
        gains=gains.tolist(),
        k_tilde=values.tolist(),
        actual_costs=eval_linear_policy_costs(game, gains).tolist(),
        closed_loop_pole=float(a + b @ gains),
        iterations=iterations,
        residual=residual,
    )
    logger.info(f"Altruistic equilibrium after {iterations} sweeps, residual {residual:.2e}")
    return eq


def price_of_cooperation(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    cooperation: Optional[CooperationMatrix] = None,
    fb_equilibria: Sequence[FeedbackEquilibrium] = (),
    settings: Optional[SolverSettings] = None,
) -> PoCReport:
    """nu_i = J_i at the altruistic equilibrium over the worst Nash cost of player i."""
    if not fb_equilibria:
        raise NoEquilibrium("price of cooperation needs at least one feedback equilibrium")
    altruistic = solve_altruistic_fb(game, params, cooperation, settings)
    baseline = np.max(np.array([eq.costs for eq in fb_equilibria]), axis=0)
    nu = np.asarray(altruistic.actual_costs) / baseline
    return PoCReport(
        nu=nu.tolist(),
        altruistic=altruistic,
        baseline_costs=baseline.tolist(),
        single_equilibrium=True,
    )
