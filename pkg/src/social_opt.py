import logging
from typing import Optional

import numpy as np

from src.exceptions import NegativeTime
from src.game_model import derive_params, validate_spec
from src.pydantic_models import DerivedParams, SocialOptimum, ValidatedGame, WeightVector

logger = logging.getLogger(__name__)


def solve_social(
    game: ValidatedGame,
    params: Optional[DerivedParams] = None,
    mu: Optional[WeightVector] = None,
) -> SocialOptimum:
    """Centralized optimum of sum_i mu_i J_i, solved in feedback form.

    `mu` defaults to the game's own weights; passing another vector evaluates
    the same game under a different weighting.
    """
    if mu is not None:
        game = validate_spec(game.spec, mu, game.cooperation)
        params = None
    params = params or derive_params(game)
    a = game.a
    root = np.sqrt(a * a + params.q_bar * params.b_bar)
    k_hat = (a + root) / params.b_bar
    gains = -game.b * k_hat / (game.mu * game.r)
    opt = SocialOptimum(
        k_hat=float(k_hat),
        gains=gains.tolist(),
        closed_loop_pole=float(a - params.b_bar * k_hat),
        cost=float(k_hat * game.x0 ** 2),
    )
    logger.info(f"Social optimum: k_hat = {opt.k_hat:.6g}, J = {opt.cost:.6g}")
    return opt


def social_control(opt: SocialOptimum, game: ValidatedGame, t: float) -> np.ndarray:
    """Open-loop form u_i(t) = g_i exp(pole t) x0 of the optimal policies."""
    if t < 0:
        raise NegativeTime(f"t = {t} must be nonnegative", field="t")
    return np.asarray(opt.gains) * np.exp(opt.closed_loop_pole * t) * game.x0
