import logging
from typing import Optional, Sequence

import numpy as np

from src.exceptions import NegativeTime
from src.game_model import derive_params
from src.pydantic_models import DerivedParams, OpenLoopEquilibrium, ValidatedGame

logger = logging.getLogger(__name__)


def solve_openloop(game: ValidatedGame, params: Optional[DerivedParams] = None) -> OpenLoopEquilibrium:
    """Unique open-loop Nash equilibrium in closed form.

    Costs are k_i x0^2: quadratic costs of a linear system scale with the
    square of the initial state.
    """
    params = params or derive_params(game)
    a, q = game.a, game.q
    sigma = np.asarray(params.sigma)
    s = np.asarray(params.s)
    root = np.sqrt(a * a + params.sigma_bar)
    gap = root - a

    xi = q / gap
    k_star = (q / 2 + sigma * q / (2 * gap ** 2)) / root
    x0_sq = game.x0 ** 2
    eq = OpenLoopEquilibrium(
        xi=xi.tolist(),
        p_bar=float(root + a),
        k_star=k_star.tolist(),
        decay_rate=float(a - s @ xi),
        costs=(k_star * x0_sq).tolist(),
        weighted_cost=float(game.mu @ k_star * x0_sq),
    )
    logger.info(f"Open-loop NE: p_bar = {eq.p_bar:.6g}, decay rate {eq.decay_rate:.6g}")
    return eq


def openloop_control(eq: OpenLoopEquilibrium, game: ValidatedGame, t: float) -> np.ndarray:
    """Equilibrium control values u_i(t)."""
    if t < 0:
        raise NegativeTime(f"t = {t} must be nonnegative", field="t")
    xi = np.asarray(eq.xi)
    return -(game.b / game.r) * xi * np.exp(eq.decay_rate * t) * game.x0


def riccati_residual_ol(game: ValidatedGame, xi: Sequence[float]) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    s = game.b ** 2 / game.r
    return 2 * game.a * xi + game.q - xi * (s @ xi)


def cost_equation_residual(game: ValidatedGame, eq: OpenLoopEquilibrium) -> np.ndarray:
    """Residual of the linear equation fixing the open-loop cost coefficients."""
    s = game.b ** 2 / game.r
    xi = np.asarray(eq.xi)
    k = np.asarray(eq.k_star)
    return 2 * (game.a - s @ xi) * k + game.q + s * xi ** 2
